//! Kepler's equation `M = E - ε sin E` for elliptic orbits (`0 <= ε < 1`).
//!
//! Two solution routes: a safeguarded Newton iteration (with a pure
//! bisection fallback) and the Lagrange-inversion power series in `ε`,
//!
//! ```text
//! E = M + Σ_{n>=1} a_n(M) εⁿ,   a_n(M) = 1/n! · d^{n-1}/dM^{n-1} sinⁿ M.
//! ```
//!
//! Expanding `sinⁿ M` into harmonics and differentiating termwise gives
//!
//! ```text
//! a_n(M) = 1/(2^{n-1} n!) Σ_{0 <= k < n/2} (-1)^k C(n,k) (n-2k)^{n-1} sin((n-2k) M)
//! ```
//!
//! which is what the coefficient table stores. The series converges for all
//! `M` only while `ε` stays below the Laplace limit constant.

use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use crate::effect_bounds::tanh_root;
use crate::error::{check_finite, domain, Error, Result};
use crate::numerics::{bisect, newton_bisect, Bracket};

/// Highest series order [`kepler_series`] accepts.
pub const SERIES_ORDER_CAP: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeplerProblem {
    mean_anomaly: f64,
    eccentricity: f64,
}

impl KeplerProblem {
    pub fn new(mean_anomaly: f64, eccentricity: f64) -> Result<Self> {
        check_finite("mean anomaly", mean_anomaly)?;
        check_eccentricity(eccentricity)?;
        Ok(KeplerProblem {
            mean_anomaly,
            eccentricity,
        })
    }

    pub fn mean_anomaly(&self) -> f64 {
        self.mean_anomaly
    }

    pub fn eccentricity(&self) -> f64 {
        self.eccentricity
    }

    fn residual(&self, e: f64) -> f64 {
        (e - self.eccentricity * e.sin() - self.mean_anomaly).abs()
    }
}

fn check_eccentricity(eps: f64) -> Result<f64> {
    if (0.0..1.0).contains(&eps) {
        Ok(eps)
    } else {
        Err(domain(format!(
            "eccentricity must lie in [0, 1), got {eps}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveMethod {
    Newton,
    Bisection,
    Series,
}

impl SolveMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveMethod::Newton => "newton",
            SolveMethod::Bisection => "bisection",
            SolveMethod::Series => "series",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeplerSolution {
    pub eccentric_anomaly: f64,
    /// `|E - ε sin E - M|`
    pub residual: f64,
    pub method: SolveMethod,
    /// Iteration count for the iterative methods, truncation order for the
    /// series.
    pub iterations_or_order: usize,
}

/// `E - ε sin E`
pub fn mean_anomaly(eccentric_anomaly: f64, eps: f64) -> Result<f64> {
    check_eccentricity(eps)?;
    Ok(eccentric_anomaly - eps * eccentric_anomaly.sin())
}

/// `M` reduced to `m ∈ [0, π]`.
struct Reduced {
    m: f64,
    /// Multiple of 2π removed from `M`.
    offset: f64,
    reflected: bool,
}

fn reduce(mean_anomaly: f64) -> Reduced {
    let m = mean_anomaly.rem_euclid(TAU);
    let offset = mean_anomaly - m;
    if m > PI {
        Reduced {
            m: TAU - m,
            offset,
            reflected: true,
        }
    } else {
        Reduced {
            m,
            offset,
            reflected: false,
        }
    }
}

impl Reduced {
    fn restore(&self, e: f64) -> f64 {
        if self.reflected {
            self.offset + (TAU - e)
        } else {
            self.offset + e
        }
    }
}

/// Solves for the eccentric anomaly to `|E - ε sin E - M| <= tol`.
///
/// After reduction to `m ∈ [0, π]` the root lies in `[m, m + ε]`. Newton
/// starts from `m + ε sin m` with bisection safeguarding inside that
/// bracket; if it fails to meet `tol`, plain bisection on `[m - ε, m + ε]`
/// takes over.
pub fn kepler_solve(problem: &KeplerProblem, tol: f64) -> Result<KeplerSolution> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(domain(format!("tolerance must be positive, got {tol}")));
    }
    let eps = problem.eccentricity;
    let reduced = reduce(problem.mean_anomaly);
    let m = reduced.m;

    let finish = |e_reduced: f64, method, iterations| {
        let e = reduced.restore(e_reduced);
        KeplerSolution {
            eccentric_anomaly: e,
            residual: problem.residual(e),
            method,
            iterations_or_order: iterations,
        }
    };

    if eps == 0.0 {
        return Ok(finish(m, SolveMethod::Newton, 0));
    }

    let f = |e: f64| e - eps * e.sin() - m;
    let df = |e: f64| 1.0 - eps * e.cos();
    let newton_bracket = Bracket::new(m, m + eps)?;
    if let Ok(r) = newton_bisect(f, df, newton_bracket, m + eps * m.sin(), tol) {
        if r.residual <= tol {
            return Ok(finish(r.root, SolveMethod::Newton, r.iterations));
        }
    }

    let wide = Bracket::new(m - eps, m + eps)?;
    let r = bisect(f, wide, tol)?;
    if r.residual <= tol {
        Ok(finish(r.root, SolveMethod::Bisection, r.iterations))
    } else {
        Err(Error::NoConvergence {
            iterations: r.iterations,
            residual: r.residual,
        })
    }
}

/// Harmonic representation of `a_n`: pairs `(k, c)` with
/// `a_n(M) = Σ c · sin(k M)`.
type Harmonics = Vec<(u32, f64)>;

fn harmonics(n: usize) -> Harmonics {
    let nf = n as f64;
    // 1 / (2^{n-1} n!)
    let scale = (1..=n).fold(1.0, |acc, i| acc / i as f64) / 2f64.powi(n as i32 - 1);
    let mut binom = 1.0;
    let mut out = Vec::with_capacity(n / 2 + 1);
    for k in 0..n.div_ceil(2) {
        let j = n - 2 * k;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        out.push((
            j as u32,
            sign * binom * (j as f64).powi(n as i32 - 1) * scale,
        ));
        binom *= (nf - k as f64) / (k as f64 + 1.0);
    }
    out
}

fn coefficient_table() -> &'static [Harmonics] {
    static TABLE: OnceLock<Vec<Harmonics>> = OnceLock::new();
    TABLE.get_or_init(|| {
        (0..=SERIES_ORDER_CAP)
            .map(|n| if n == 0 { Vec::new() } else { harmonics(n) })
            .collect()
    })
}

fn check_order(order: usize) -> Result<()> {
    if order == 0 {
        return Err(domain("series order must be at least 1"));
    }
    if order > SERIES_ORDER_CAP {
        return Err(Error::OrderTooLarge {
            order,
            cap: SERIES_ORDER_CAP,
        });
    }
    Ok(())
}

/// Lagrange coefficient `a_n(M)`, `1 <= n <= SERIES_ORDER_CAP`.
pub fn lagrange_coefficient(n: usize, mean_anomaly: f64) -> Result<f64> {
    check_order(n)?;
    Ok(eval_harmonics(&coefficient_table()[n], mean_anomaly))
}

fn eval_harmonics(h: &[(u32, f64)], m: f64) -> f64 {
    h.iter().map(|&(k, c)| c * (k as f64 * m).sin()).sum()
}

/// Partial sums `M + Σ_{n<=order} a_n(M) εⁿ` for `order = 1..=max_order`.
fn partial_sums(problem: &KeplerProblem, max_order: usize) -> Result<Vec<f64>> {
    check_order(max_order)?;
    let m = problem.mean_anomaly;
    let eps = problem.eccentricity;
    let table = coefficient_table();
    let mut sum = m;
    let mut power = 1.0;
    Ok((1..=max_order)
        .map(|n| {
            power *= eps;
            sum += eval_harmonics(&table[n], m) * power;
            sum
        })
        .collect())
}

/// Truncated eccentricity series. The residual is reported, not bounded:
/// above the Laplace limit the series diverges.
pub fn kepler_series(problem: &KeplerProblem, order: usize) -> Result<KeplerSolution> {
    let e = *partial_sums(problem, order)?.last().expect("order >= 1");
    Ok(KeplerSolution {
        eccentric_anomaly: e,
        residual: problem.residual(e),
        method: SolveMethod::Series,
        iterations_or_order: order,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceRow {
    pub order: usize,
    pub series: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceTable {
    /// Reference solution from [`kepler_solve`].
    pub newton: f64,
    pub rows: Vec<DivergenceRow>,
}

impl DivergenceTable {
    /// True when the truncation error grows somewhere along the table.
    pub fn is_non_monotone(&self) -> bool {
        self.rows
            .windows(2)
            .any(|w| w[1].abs_error > w[0].abs_error)
    }
}

/// Series value and absolute error against Newton for every order up to
/// `max_order`.
pub fn divergence_table(
    problem: &KeplerProblem,
    max_order: usize,
    tol: f64,
) -> Result<DivergenceTable> {
    let newton = kepler_solve(problem, tol)?.eccentric_anomaly;
    let rows = partial_sums(problem, max_order)?
        .into_iter()
        .enumerate()
        .map(|(i, series)| DivergenceRow {
            order: i + 1,
            series,
            abs_error: (series - newton).abs(),
        })
        .collect();
    Ok(DivergenceTable { newton, rows })
}

/// Radius of convergence of the eccentricity series: the maximum of
/// `x / cosh x`, attained where `x tanh x = 1`.
pub fn series_radius() -> f64 {
    let z = tanh_root();
    z / z.cosh()
}
