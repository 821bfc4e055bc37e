//! 2×2 case-control tables, their sample estimators, and the two
//! parameterizations of a binary exposure / binary disease population.
//!
//! The cohort view is `(p, q, w)`: exposure probability among cases, among
//! controls, and disease prevalence. The risk view is `(Pr(D|E), Pr(D|Ē), v)`
//! with `v` the pooled exposure probability. Both describe the same joint
//! distribution, so the odds ratio is identical in either.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_open_unit, Error, Result};

/// Case-control counts, rows = disease status, columns = exposure.
///
/// ```text
///            E      Ē
///   D       n11    n12
///   D̄       n21    n22
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TwoByTwoTable {
    n11: u64,
    n12: u64,
    n21: u64,
    n22: u64,
}

impl TwoByTwoTable {
    pub fn new(n11: u64, n12: u64, n21: u64, n22: u64) -> Result<Self> {
        if n11 + n12 == 0 {
            return Err(Error::ZeroMargin("no cases (n11 + n12 = 0)"));
        }
        if n21 + n22 == 0 {
            return Err(Error::ZeroMargin("no controls (n21 + n22 = 0)"));
        }
        Ok(TwoByTwoTable { n11, n12, n21, n22 })
    }

    /// Cells in row-major order `[n11, n12, n21, n22]`.
    pub fn cells(&self) -> [u64; 4] {
        [self.n11, self.n12, self.n21, self.n22]
    }

    pub fn cases(&self) -> u64 {
        self.n11 + self.n12
    }

    pub fn controls(&self) -> u64 {
        self.n21 + self.n22
    }

    pub fn total(&self) -> u64 {
        self.cases() + self.controls()
    }

    pub fn has_zero_cell(&self) -> bool {
        self.cells().contains(&0)
    }

    /// Cells as reals, with 0.5 added to each when `correction` is set.
    fn real_cells(&self, correction: bool) -> Result<[f64; 4]> {
        let shift = if correction { 0.5 } else { 0.0 };
        if !correction && self.has_zero_cell() {
            return Err(Error::ZeroCell);
        }
        Ok(self.cells().map(|n| n as f64 + shift))
    }
}

impl fmt::Display for TwoByTwoTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.n11, self.n12, self.n21, self.n22)
    }
}

/// Parses `n11,n12,n21,n22`. Whitespace around each count is ignored.
impl FromStr for TwoByTwoTable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(Error::InvalidTable(format!(
                "expected four comma-separated counts n11,n12,n21,n22, got {} field(s)",
                parts.len()
            )));
        }
        let mut counts = [0u64; 4];
        for (slot, part) in counts.iter_mut().zip(&parts) {
            *slot = part.parse().map_err(|_| {
                Error::InvalidTable(format!("not a non-negative integer: {part:?}"))
            })?;
        }
        TwoByTwoTable::new(counts[0], counts[1], counts[2], counts[3])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleProportions {
    /// `n11 / n_D`
    pub p_hat: f64,
    /// `n21 / n_D̄`
    pub q_hat: f64,
    /// `n_D / N`
    pub w_hat: f64,
    pub n: u64,
}

pub fn estimate_probs(t: &TwoByTwoTable) -> SampleProportions {
    let n = t.total();
    SampleProportions {
        p_hat: t.n11 as f64 / t.cases() as f64,
        q_hat: t.n21 as f64 / t.controls() as f64,
        w_hat: t.cases() as f64 / n as f64,
        n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OddsRatioEstimate {
    pub or: f64,
    /// `ln(or)`
    pub mu: f64,
}

/// Cross-product odds ratio `(n11 n22) / (n12 n21)`.
pub fn estimate_or(t: &TwoByTwoTable, correction: bool) -> Result<OddsRatioEstimate> {
    let [a, b, c, d] = t.real_cells(correction)?;
    let or = (a * d) / (b * c);
    Ok(OddsRatioEstimate { or, mu: or.ln() })
}

/// `ln(OR) / sqrt(sum 1/n_ij)`, asymptotically standard normal under no
/// association.
pub fn t_statistic(t: &TwoByTwoTable, correction: bool) -> Result<f64> {
    let cells = t.real_cells(correction)?;
    let mu = estimate_or(t, correction)?.mu;
    let inv_sum: f64 = cells.iter().map(|n| 1.0 / n).sum();
    Ok(mu / inv_sum.sqrt())
}

/// Plug-in design standard deviation `σ̂(ŵ)`, so that `T = sqrt(N) μ̂ / σ̂`.
pub fn sigma_hat(t: &TwoByTwoTable, correction: bool) -> Result<f64> {
    let [a, b, c, d] = t.real_cells(correction)?;
    let cases = a + b;
    let controls = c + d;
    let n = cases + controls;
    let p = a / cases;
    let q = c / controls;
    let w = cases / n;
    Ok((1.0 / (w * p * (1.0 - p)) + 1.0 / ((1.0 - w) * q * (1.0 - q))).sqrt())
}

/// `(Pr(E|D), Pr(E|D̄), Pr(D))`, all in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CohortParams {
    p: f64,
    q: f64,
    w: f64,
}

impl CohortParams {
    pub fn new(p: f64, q: f64, w: f64) -> Result<Self> {
        Ok(CohortParams {
            p: check_open_unit("p = Pr(E|D)", p)?,
            q: check_open_unit("q = Pr(E|D̄)", q)?,
            w: check_open_unit("w = Pr(D)", w)?,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    /// `p(1-q) / (q(1-p))`
    pub fn odds_ratio(&self) -> f64 {
        (self.p * (1.0 - self.q)) / (self.q * (1.0 - self.p))
    }
}

/// `(Pr(D|E), Pr(D|Ē), Pr(E))`, all in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskParams {
    r_de: f64,
    r_dne: f64,
    v: f64,
}

impl RiskParams {
    pub fn new(r_de: f64, r_dne: f64, v: f64) -> Result<Self> {
        Ok(RiskParams {
            r_de: check_open_unit("Pr(D|E)", r_de)?,
            r_dne: check_open_unit("Pr(D|Ē)", r_dne)?,
            v: check_open_unit("v = Pr(E)", v)?,
        })
    }

    /// `Pr(D|E)`
    pub fn r_de(&self) -> f64 {
        self.r_de
    }

    /// `Pr(D|Ē)`
    pub fn r_dne(&self) -> f64 {
        self.r_dne
    }

    pub fn v(&self) -> f64 {
        self.v
    }
}

// The open-interval invariants keep every denominator below strictly inside
// (0, 1), so the maps cannot fail.

pub fn cohort_to_risk(c: &CohortParams) -> RiskParams {
    let v = c.w * c.p + (1.0 - c.w) * c.q;
    RiskParams {
        r_de: c.w * c.p / v,
        r_dne: c.w * (1.0 - c.p) / (1.0 - v),
        v,
    }
}

pub fn risk_to_cohort(r: &RiskParams) -> CohortParams {
    let w = r.v * r.r_de + (1.0 - r.v) * r.r_dne;
    CohortParams {
        p: r.v * r.r_de / w,
        q: r.v * (1.0 - r.r_de) / (1.0 - w),
        w,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OddsAndRisk {
    pub or: f64,
    pub rr: f64,
}

pub fn or_rr_from_risk(r: &RiskParams) -> OddsAndRisk {
    let odds = |x: f64| x / (1.0 - x);
    OddsAndRisk {
        or: odds(r.r_de) / odds(r.r_dne),
        rr: r.r_de / r.r_dne,
    }
}

/// Effect-size summary for a population described by [`RiskParams`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectSummary {
    pub or: f64,
    pub rr: f64,
    pub mu: f64,
    pub sigma: f64,
    pub gamma: f64,
}

impl EffectSummary {
    pub fn from_risk(r: &RiskParams) -> Self {
        let OddsAndRisk { or, rr } = or_rr_from_risk(r);
        let mu = or.ln();
        let sigma = crate::effect_bounds::sigma2_v_unchecked(r.v, r.r_de, r.r_dne).sqrt();
        let gamma = mu / sigma;
        debug_assert!(gamma.abs() < crate::effect_bounds::LLC + 1e-12);
        EffectSummary {
            or,
            rr,
            mu,
            sigma,
            gamma,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(n: [u64; 4]) -> TwoByTwoTable {
        TwoByTwoTable::new(n[0], n[1], n[2], n[3]).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn proportions() {
        let s = estimate_probs(&table([20, 10, 10, 20]));
        assert!(close(s.p_hat, 2.0 / 3.0, 1e-15));
        assert!(close(s.q_hat, 1.0 / 3.0, 1e-15));
        assert_eq!(s.w_hat, 0.5);
        assert_eq!(s.n, 60);

        let s = estimate_probs(&table([1, 1, 1, 1]));
        assert_eq!((s.p_hat, s.q_hat, s.w_hat, s.n), (0.5, 0.5, 0.5, 4));

        let s = estimate_probs(&table([9, 1, 1, 9]));
        assert_eq!((s.p_hat, s.q_hat, s.w_hat, s.n), (0.9, 0.1, 0.5, 20));
    }

    #[test]
    fn empty_margins_rejected() {
        assert_eq!(
            TwoByTwoTable::new(0, 0, 3, 4),
            Err(Error::ZeroMargin("no cases (n11 + n12 = 0)"))
        );
        assert!(matches!(
            TwoByTwoTable::new(3, 4, 0, 0),
            Err(Error::ZeroMargin(_))
        ));
    }

    #[test]
    fn odds_ratio_estimates() {
        let e = estimate_or(&table([20, 10, 10, 20]), false).unwrap();
        assert_eq!(e.or, 4.0);
        assert!(close(e.mu, 1.386_294_361_119_890_6, 1e-15));

        let e = estimate_or(&table([5, 5, 5, 5]), false).unwrap();
        assert_eq!((e.or, e.mu), (1.0, 0.0));

        // (10.5 * 5.5) / (0.5 * 5.5) = 21
        let e = estimate_or(&table([10, 0, 5, 5]), true).unwrap();
        assert!(close(e.or, 21.0, 1e-12));
        assert!(close(e.mu, 21f64.ln(), 1e-12));
        assert!(close(e.mu, 3.044_522, 1e-6));
    }

    #[test]
    fn zero_cell_requires_correction() {
        let t = table([10, 0, 5, 5]);
        assert_eq!(estimate_or(&t, false), Err(Error::ZeroCell));
        assert_eq!(t_statistic(&t, false), Err(Error::ZeroCell));
        assert!(t_statistic(&t, true).unwrap().is_finite());
    }

    #[test]
    fn t_statistic_hand_cases() {
        // sum 1/n = 0.3, ln 4 / sqrt(0.3)
        let t = t_statistic(&table([20, 10, 10, 20]), false).unwrap();
        assert!(close(t, 4f64.ln() / 0.3f64.sqrt(), 1e-14));
        assert!(close(t, 2.531_015, 1e-6));

        assert_eq!(t_statistic(&table([5, 5, 5, 5]), false).unwrap(), 0.0);

        let t = t_statistic(&table([9, 1, 1, 9]), false).unwrap();
        let expected = 81f64.ln() / (1.0 / 9.0 + 1.0 + 1.0 + 1.0 / 9.0f64).sqrt();
        assert!(close(t, expected, 1e-14));
        assert!(close(t, 2.948, 1e-3));
    }

    #[test]
    fn sigma_hat_factored_form() {
        // sigma_hat^2 = 2*(9/2) + 2*(9/2) = 18 for (20,10,10,20)
        let t = table([20, 10, 10, 20]);
        assert!(close(sigma_hat(&t, false).unwrap(), 18f64.sqrt(), 1e-14));
    }

    #[test]
    fn parse_tables() {
        assert_eq!(
            "20,10,10,20".parse::<TwoByTwoTable>().unwrap(),
            table([20, 10, 10, 20])
        );
        assert_eq!(
            " 1, 2 ,3,4\n".parse::<TwoByTwoTable>().unwrap(),
            table([1, 2, 3, 4])
        );
        for bad in [
            "20,10,10",
            "1,2,3,4,5",
            "1,-2,3,4",
            "a,b,c,d",
            "",
            "1.5,2,3,4",
        ] {
            assert!(
                matches!(bad.parse::<TwoByTwoTable>(), Err(Error::InvalidTable(_))),
                "{bad}"
            );
        }
        assert!(matches!(
            "0,0,1,1".parse::<TwoByTwoTable>(),
            Err(Error::ZeroMargin(_))
        ));
        assert_eq!(table([1, 2, 3, 4]).to_string(), "1,2,3,4");
    }

    #[test]
    fn cohort_risk_examples() {
        let r = cohort_to_risk(&CohortParams::new(2.0 / 3.0, 1.0 / 3.0, 0.5).unwrap());
        assert!(close(r.r_de(), 2.0 / 3.0, 1e-15));
        assert!(close(r.r_dne(), 1.0 / 3.0, 1e-15));
        assert!(close(r.v(), 0.5, 1e-15));

        let r = cohort_to_risk(&CohortParams::new(0.3, 0.3, 0.1).unwrap());
        assert!(close(r.r_de(), 0.1, 1e-15));
        assert!(close(r.r_dne(), 0.1, 1e-15));
        assert!(close(r.v(), 0.3, 1e-15));

        let r = cohort_to_risk(&CohortParams::new(0.9, 0.1, 0.5).unwrap());
        assert!(close(r.v(), 0.5, 1e-15));
        assert!(close(r.r_de(), 0.9, 1e-15));
        assert!(close(r.r_dne(), 0.1, 1e-15));
    }

    #[test]
    fn risk_cohort_examples() {
        let c = risk_to_cohort(&RiskParams::new(2.0 / 3.0, 1.0 / 3.0, 0.5).unwrap());
        assert!(close(c.p(), 2.0 / 3.0, 1e-15));
        assert!(close(c.q(), 1.0 / 3.0, 1e-15));
        assert!(close(c.w(), 0.5, 1e-15));

        let c = risk_to_cohort(&RiskParams::new(0.1, 0.1, 0.3).unwrap());
        assert!(close(c.p(), 0.3, 1e-15));
        assert!(close(c.q(), 0.3, 1e-15));
        assert!(close(c.w(), 0.1, 1e-15));
    }

    #[test]
    fn odds_and_relative_risk() {
        let e = or_rr_from_risk(&RiskParams::new(0.5, 0.2, 0.3).unwrap());
        assert!(close(e.or, 4.0, 1e-14));
        assert!(close(e.rr, 2.5, 1e-14));

        let e = or_rr_from_risk(&RiskParams::new(0.3, 0.3, 0.7).unwrap());
        assert_eq!((e.or, e.rr), (1.0, 1.0));

        let e =
            or_rr_from_risk(&RiskParams::new(0.916_778_279_8, 1.0 - 0.916_778_279_8, 0.5).unwrap());
        assert!(close(e.or, 121.354, 1e-3));
        assert!(close(e.rr, 11.016, 1e-3));
    }

    #[test]
    fn open_interval_validation() {
        assert!(matches!(
            CohortParams::new(0.0, 0.5, 0.5),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            CohortParams::new(0.5, 1.0, 0.5),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            RiskParams::new(0.5, 0.5, f64::NAN),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn effect_summary_at_or_four_optimum() {
        let s = EffectSummary::from_risk(&RiskParams::new(2.0 / 3.0, 1.0 / 3.0, 0.5).unwrap());
        assert!(close(s.or, 4.0, 1e-14));
        assert!(close(s.rr, 2.0, 1e-14));
        assert_eq!(s.mu, s.or.ln());
        assert!(close(s.sigma, 18f64.sqrt(), 1e-13));
        assert!(close(s.gamma, 0.326_753, 1e-6));
    }
}
