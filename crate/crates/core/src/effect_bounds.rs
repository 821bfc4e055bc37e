//! Design dependence of the standardized log odds ratio `γ = ln(OR) / σ`
//! and its supremum over all designs.
//!
//! `σ²` is the per-observation variance factor of `ln(OR̂)`: the sum of
//! reciprocal joint cell probabilities, written either in the cohort view
//! (as a function of prevalence `w`) or in the risk view (as a function of
//! pooled exposure `v`). For fixed OR the best design has
//! `Pr(D|E) = 1 - Pr(D|Ē) = sqrt(OR) / (1 + sqrt(OR))` and `v = 1/2`, giving
//! `γ_max(OR) = κ(ln OR)` with `κ(x) = (x/4) sech(x/4)`. Maximizing `κ`
//! leads to `z tanh z = 1`, and `κ(4z) = z sech z` is the Laplace limit
//! constant, the same number that bounds the convergence of the
//! eccentricity power series for Kepler's equation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::contingency::{or_rr_from_risk, RiskParams};
use crate::error::{check_open_unit, check_positive, domain, Result};
use crate::numerics::{newton_bisect, Bracket};

/// Reference value of the Laplace limit constant, `z sech z` with
/// `z tanh z = 1`. [`bound_constants`] recomputes it from scratch.
pub const LLC: f64 = 0.662_743_419_349_181_6;

/// Tolerance on `|z tanh z - 1|` for the shared root.
pub const ROOT_TOLERANCE: f64 = 1e-14;

/// Above this `|ln OR|`, [`gamma_max`] switches to the hyperbolic form.
const EXP_FORM_LIMIT: f64 = 300.0;

/// Tolerance used by [`verify_bound`] when comparing against the bounds.
pub const VERIFY_SLACK: f64 = 1e-12;

/// Standard deviation of the jitter around the attainment point.
pub const VERIFY_JITTER: f64 = 0.02;

const VERIFY_CHUNK: usize = 8192;

/// `σ²(w) = 1/(w p(1-p)) + 1/((1-w) q(1-q))`
pub fn sigma2_w(w: f64, p: f64, q: f64) -> Result<f64> {
    check_open_unit("w", w)?;
    check_open_unit("p", p)?;
    check_open_unit("q", q)?;
    Ok(two_group_variance(w, p, q))
}

/// `σ²(v) = 1/(v r1(1-r1)) + 1/((1-v) r0(1-r0))` with `r1 = Pr(D|E)`,
/// `r0 = Pr(D|Ē)`.
pub fn sigma2_v(v: f64, r_de: f64, r_dne: f64) -> Result<f64> {
    check_open_unit("v", v)?;
    check_open_unit("Pr(D|E)", r_de)?;
    check_open_unit("Pr(D|Ē)", r_dne)?;
    Ok(two_group_variance(v, r_de, r_dne))
}

pub(crate) fn sigma2_v_unchecked(v: f64, r_de: f64, r_dne: f64) -> f64 {
    two_group_variance(v, r_de, r_dne)
}

// Both variance forms share this shape.
fn two_group_variance(share: f64, a: f64, b: f64) -> f64 {
    1.0 / (share * a * (1.0 - a)) + 1.0 / ((1.0 - share) * b * (1.0 - b))
}

/// Prevalence minimizing `σ(w)` for fixed `(p, q)`:
/// `1 / (1 + (p/q) sqrt(1/OR))`.
pub fn w_min(p: f64, q: f64) -> Result<f64> {
    check_open_unit("p", p)?;
    check_open_unit("q", q)?;
    let or = (p * (1.0 - q)) / (q * (1.0 - p));
    Ok(1.0 / (1.0 + (p / q) * or.recip().sqrt()))
}

/// Pooled exposure minimizing `σ(v)`: `1 / (1 + RR sqrt(1/OR))`.
///
/// Whether `(rr, or)` is achievable by some pair of risks is not checked.
pub fn v_min(rr: f64, or: f64) -> Result<f64> {
    check_positive("rr", rr)?;
    check_positive("or", or)?;
    Ok(1.0 / (1.0 + rr * or.recip().sqrt()))
}

/// Risks and pooled exposure maximizing `|γ|` at a given odds ratio.
pub fn optimal_risk(or: f64) -> Result<RiskParams> {
    check_positive("or", or)?;
    let r_dne = 1.0 / (1.0 + or.sqrt());
    RiskParams::new(1.0 - r_dne, r_dne, 0.5)
}

/// `γ = ln(OR) / σ(v)`.
pub fn gamma(r: &RiskParams) -> f64 {
    let or = or_rr_from_risk(r).or;
    or.ln() / sigma2_v_unchecked(r.v(), r.r_de(), r.r_dne()).sqrt()
}

/// `ln(OR) / (2 sqrt(2 + (1 + OR) / sqrt(OR)))`, the largest `γ` any design
/// reaches at this odds ratio. Negative for `OR < 1`.
pub fn gamma_max(or: f64) -> Result<f64> {
    check_positive("or", or)?;
    let x = or.ln();
    if x.abs() > EXP_FORM_LIMIT {
        return Ok(kappa(x));
    }
    Ok(x / (2.0 * (2.0 + (1.0 + or) / or.sqrt()).sqrt()))
}

/// `κ(x) = (x/4) sech(x/4)`; `γ_max` as a function of `x = ln OR`.
pub fn kappa(x: f64) -> f64 {
    let u = 0.25 * x;
    u / u.cosh()
}

/// `κ'(x) = (4 - x tanh(x/4)) / (16 cosh(x/4))`
pub fn kappa_prime(x: f64) -> f64 {
    let u = 0.25 * x;
    (4.0 - x * u.tanh()) / (16.0 * u.cosh())
}

/// Solves `z tanh z = 1` on `[1, 1.5]`.
pub fn tanh_root() -> f64 {
    let bracket = Bracket::new(1.0, 1.5).expect("static bracket");
    let f = |z: f64| z * z.tanh() - 1.0;
    let df = |z: f64| {
        let t = z.tanh();
        t + z * (1.0 - t * t)
    };
    newton_bisect(f, df, bracket, 1.2, ROOT_TOLERANCE)
        .expect("z tanh z - 1 changes sign on [1, 1.5]")
        .root
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    /// Root of `z tanh z = 1`.
    pub z: f64,
    /// `4z`, the log odds ratio at which `γ_max` peaks.
    pub x_star: f64,
    /// `exp(x_star)`
    pub or_star: f64,
    /// `κ(x_star)`, the Laplace limit constant.
    pub llc: f64,
    /// `Pr(D|E)` attaining the bound, `1/(2z) + 1/2`.
    pub p_star: f64,
}

pub fn bound_constants() -> BoundConstants {
    let z = tanh_root();
    let x_star = 4.0 * z;
    BoundConstants {
        z,
        x_star,
        or_star: x_star.exp(),
        llc: kappa(x_star),
        p_star: 0.5 / z + 0.5,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerificationReport {
    pub samples: usize,
    /// Largest `|γ|` seen.
    pub max_gamma_observed: f64,
    pub arg_max: RiskParams,
    /// Samples with `|γ| > |γ_max(OR)| + slack` or `|γ| > LLC + slack`.
    pub violations: usize,
    /// The LLC the samples were checked against.
    pub bound: f64,
}

struct ChunkOutcome {
    max_abs_gamma: f64,
    arg_max: RiskParams,
    violations: usize,
}

fn open_unit_sample(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

fn clip_open_unit(x: f64) -> f64 {
    x.clamp(f64::EPSILON, 1.0 - f64::EPSILON)
}

fn run_chunk(index: usize, count: usize, seed: u64, centre: [f64; 3], bound: f64) -> ChunkOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let jitter = Normal::new(0.0, VERIFY_JITTER).expect("positive sd");
    let first = index * VERIFY_CHUNK;

    let mut outcome = ChunkOutcome {
        max_abs_gamma: f64::NEG_INFINITY,
        arg_max: RiskParams::new(0.5, 0.5, 0.5).expect("valid"),
        violations: 0,
    };
    for global in first..first + count {
        let triple = if global % 2 == 0 {
            [
                open_unit_sample(&mut rng),
                open_unit_sample(&mut rng),
                open_unit_sample(&mut rng),
            ]
        } else {
            centre.map(|c| clip_open_unit(c + jitter.sample(&mut rng)))
        };
        let r = RiskParams::new(triple[0], triple[1], triple[2]).expect("sampled inside (0, 1)");
        let g = gamma(&r).abs();
        let g_max = gamma_max(or_rr_from_risk(&r).or)
            .map(f64::abs)
            .unwrap_or(f64::INFINITY);
        if g > g_max + VERIFY_SLACK || g > bound + VERIFY_SLACK {
            outcome.violations += 1;
        }
        if g > outcome.max_abs_gamma {
            outcome.max_abs_gamma = g;
            outcome.arg_max = r;
        }
    }
    outcome
}

/// Samples risk triples and checks every one against `γ_max(OR)` and the LLC.
///
/// Even-indexed samples are uniform on `(0,1)³`; odd-indexed ones are
/// Gaussian jitter around `(p*, 1 - p*, 1/2)`, clipped to `(0,1)`. Samples
/// are drawn in fixed-size chunks, each from its own stream of a ChaCha8
/// generator keyed by `seed`, so the report does not depend on how many
/// threads process the chunks.
pub fn verify_bound(n_samples: usize, seed: u64) -> Result<VerificationReport> {
    if n_samples == 0 {
        return Err(domain("verification needs at least one sample"));
    }
    let consts = bound_constants();
    let centre = [consts.p_star, 1.0 - consts.p_star, 0.5];
    let chunks = n_samples.div_ceil(VERIFY_CHUNK);
    let outcomes: Vec<ChunkOutcome> = (0..chunks)
        .into_par_iter()
        .map(|i| {
            let count = VERIFY_CHUNK.min(n_samples - i * VERIFY_CHUNK);
            run_chunk(i, count, seed, centre, consts.llc)
        })
        .collect();

    let mut best = &outcomes[0];
    let mut violations = 0;
    for o in &outcomes {
        violations += o.violations;
        if o.max_abs_gamma > best.max_abs_gamma {
            best = o;
        }
    }
    Ok(VerificationReport {
        samples: n_samples,
        max_gamma_observed: best.max_abs_gamma,
        arg_max: best.arg_max,
        violations,
        bound: consts.llc,
    })
}

/// `κ` through the exponential form `x / (2 sqrt(2 + (1 + e^x) / e^{x/2}))`.
/// Test oracle only.
#[cfg(test)]
fn kappa_exponential(x: f64) -> f64 {
    x / (2.0 * (2.0 + (1.0 + x.exp()) / (0.5 * x).exp()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::central_difference;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn variance_in_prevalence() {
        assert!(close(
            sigma2_w(0.5, 2.0 / 3.0, 1.0 / 3.0).unwrap(),
            18.0,
            1e-12
        ));
        assert_eq!(sigma2_w(0.5, 0.5, 0.5).unwrap(), 16.0);
        assert!(close(
            sigma2_w(0.25, 0.5, 0.5).unwrap(),
            16.0 + 16.0 / 3.0,
            1e-12
        ));
        assert!(sigma2_w(0.0, 0.5, 0.5).is_err());
        assert!(sigma2_w(0.5, 1.0, 0.5).is_err());
    }

    #[test]
    fn variance_in_pooled_exposure() {
        assert_eq!(sigma2_v(0.5, 0.5, 0.5).unwrap(), 16.0);
        assert!(close(
            sigma2_v(0.5, 2.0 / 3.0, 1.0 / 3.0).unwrap(),
            sigma2_w(0.5, 2.0 / 3.0, 1.0 / 3.0).unwrap(),
            1e-14
        ));
        // (9/4)*4 + (9/5)*6.25
        assert!(close(sigma2_v(4.0 / 9.0, 0.5, 0.2).unwrap(), 20.25, 1e-12));
        assert!(sigma2_v(0.5, 0.5, -0.1).is_err());
    }

    /// Grid argmin of `f` over `(0, 1)` with spacing `1e-4`.
    fn grid_argmin(f: impl Fn(f64) -> f64) -> f64 {
        (1..10_000)
            .map(|i| i as f64 * 1e-4)
            .min_by(|a, b| f(*a).total_cmp(&f(*b)))
            .unwrap()
    }

    #[test]
    fn prevalence_minimizer() {
        for p in [0.1, 0.37, 0.5, 0.8] {
            assert!(close(w_min(p, p).unwrap(), 0.5, 1e-15));
        }
        for (p, q) in [(2.0 / 3.0, 1.0 / 3.0), (0.9, 0.1)] {
            let w = w_min(p, q).unwrap();
            assert!(close(w, 0.5, 1e-14));
            let grid = grid_argmin(|w| sigma2_w(w, p, q).unwrap());
            assert!(close(grid, w, 1e-4));
        }
        assert!(w_min(0.0, 0.5).is_err());
    }

    #[test]
    fn exposure_minimizer() {
        assert_eq!(v_min(1.0, 1.0).unwrap(), 0.5);
        let v = v_min(2.5, 4.0).unwrap();
        assert!(close(v, 4.0 / 9.0, 1e-15));
        let grid = grid_argmin(|v| sigma2_v(v, 0.5, 0.2).unwrap());
        assert!(close(grid, v, 1e-4));
        let c = bound_constants();
        assert!(close(
            v_min(c.or_star.sqrt(), c.or_star).unwrap(),
            0.5,
            1e-15
        ));
        assert!(close(v_min(11.016, 121.354).unwrap(), 0.5, 1e-4));
        assert!(v_min(0.0, 1.0).is_err());
        assert!(v_min(1.0, -2.0).is_err());
    }

    #[test]
    fn optimal_risk_examples() {
        let r = optimal_risk(1.0).unwrap();
        assert_eq!((r.r_de(), r.r_dne(), r.v()), (0.5, 0.5, 0.5));
        let r = optimal_risk(4.0).unwrap();
        assert!(close(r.r_de(), 2.0 / 3.0, 1e-15));
        assert!(close(r.r_dne(), 1.0 / 3.0, 1e-15));
        let r = optimal_risk(bound_constants().or_star).unwrap();
        assert!(close(r.r_de(), 0.916_778_279_8, 1e-10));
        assert!(optimal_risk(0.0).is_err());
    }

    #[test]
    fn optimal_risk_is_grid_argmax_at_or_four() {
        // For fixed OR = 4, Pr(D|Ē) is determined by Pr(D|E); search (Pr(D|E), v).
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for i in 1..1000 {
            let r1 = i as f64 * 1e-3;
            let odds0 = r1 / (1.0 - r1) / 4.0;
            let r0 = odds0 / (1.0 + odds0);
            for j in 1..1000 {
                let v = j as f64 * 1e-3;
                let g = gamma(&RiskParams::new(r1, r0, v).unwrap());
                if g > best.0 {
                    best = (g, r1, v);
                }
            }
        }
        let r = optimal_risk(4.0).unwrap();
        assert!(close(best.1, r.r_de(), 1e-3));
        assert!(close(best.2, r.v(), 1e-3));
        assert!(close(best.0, gamma_max(4.0).unwrap(), 1e-6));
        assert!(best.0 <= gamma_max(4.0).unwrap());
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(gamma(&RiskParams::new(0.3, 0.3, 0.1).unwrap()), 0.0);
        let g = gamma(&RiskParams::new(2.0 / 3.0, 1.0 / 3.0, 0.5).unwrap());
        assert!(close(g, 4f64.ln() / 18f64.sqrt(), 1e-14));
        let g = gamma(&RiskParams::new(0.916_778, 0.083_222, 0.5).unwrap());
        assert!(close(g, 0.662_743, 1e-6));
    }

    #[test]
    fn gamma_max_examples() {
        assert_eq!(gamma_max(1.0).unwrap(), 0.0);
        assert!(close(
            gamma_max(4.0).unwrap(),
            0.326_752_714_489_515_7,
            1e-15
        ));
        assert!(close(gamma_max(121.354).unwrap(), 0.6627, 1e-4));
        assert!(gamma_max(0.0).is_err());
        assert!(gamma_max(f64::INFINITY).is_err());
    }

    #[test]
    fn gamma_max_extreme_odds_ratios() {
        for x in [-700.0, -400.0, -301.0, 301.0, 400.0, 700.0] {
            let g = gamma_max(f64::exp(x)).unwrap();
            assert!(g.is_finite());
            assert!(close(g, kappa(x), 1e-13 * x.abs()));
        }
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(kappa(0.0), 0.0);
        assert!(close(kappa(4.798_714), 0.662_743, 1e-6));
        assert!(close(kappa(4.0), 0.648_054_273_663_885_4, 1e-15));
        assert_eq!(kappa(-3.7), -kappa(3.7));
    }

    #[test]
    fn kappa_matches_exponential_form() {
        for i in -699..700 {
            let x = i as f64 + 0.375;
            let exp_form = kappa_exponential(x);
            assert!(
                close(kappa(x), exp_form, 1e-14),
                "x={x}: {} vs {exp_form}",
                kappa(x)
            );
        }
    }

    #[test]
    fn kappa_prime_examples() {
        assert_eq!(kappa_prime(0.0), 0.25);
        let c = bound_constants();
        assert!(kappa_prime(c.x_star).abs() < 1e-10);
        let fd = central_difference(kappa, 4.0);
        assert!(close(kappa_prime(4.0), fd, 1e-9));
        assert!(close(kappa_prime(4.0), 0.038_624_981_524_828_08, 1e-15));
    }

    #[test]
    fn kappa_prime_sign() {
        let x_star = bound_constants().x_star;
        for i in 0..480 {
            assert!(kappa_prime(i as f64 * 0.01) > 0.0);
        }
        for i in 1..300 {
            assert!(kappa_prime(x_star + i as f64 * 0.1) < 0.0);
        }
    }

    #[test]
    fn constants() {
        let c = bound_constants();
        assert!((c.z * c.z.tanh() - 1.0).abs() < 1e-12);
        assert!(close(c.z, 1.199_678_640_257_733_8, 1e-14));
        assert_eq!(c.x_star, 4.0 * c.z);
        assert!(close(c.or_star, 121.354_323_638_980_44, 1e-11));
        assert!(close(c.llc, LLC, 1e-15));
        assert!(close(
            c.llc,
            c.x_star / (4.0 * (c.x_star / 4.0).cosh()),
            1e-14
        ));
        assert!(close(c.p_star, 0.916_778_279_800_482_3, 1e-14));
        assert_eq!(c, bound_constants());
    }

    #[test]
    fn attainment_conditions() {
        for or in [0.01, 0.5, 2.0, 4.0, 121.354, 1e4] {
            let r = optimal_risk(or).unwrap();
            let e = or_rr_from_risk(&r);
            assert!(close(e.rr * e.rr, e.or, 1e-12 * e.or));
            assert_eq!(r.r_de(), 1.0 - r.r_dne());
        }
    }

    #[test]
    fn verify_single_sample() {
        let rep = verify_bound(1, 99).unwrap();
        assert_eq!(rep.samples, 1);
        assert_eq!(rep.violations, 0);
        assert!(verify_bound(0, 1).is_err());
    }

    #[test]
    fn verify_independent_of_thread_count() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| verify_bound(50_000, 7).unwrap())
        };
        let one = run(1);
        assert_eq!(one, run(4));
        assert_eq!(one.violations, 0);
        assert_ne!(one, verify_bound(50_000, 8).unwrap());
    }
}
