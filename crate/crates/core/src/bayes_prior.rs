//! Prior specification for the standardized effect `μ/σ`.
//!
//! A zero-mean normal prior with variance `σ₀` on `μ/σ` and the tail
//! constraint `Pr(OR > x) = β` give `ln(x)/σ_m = sqrt(σ₀) Φ⁻¹(1 - β)`, so
//!
//! ```text
//! σ₀ = ( (ln(x) / σ_m) / Φ⁻¹(1 - β) )²
//! ```
//!
//! The prior is flattest when `σ_m` is as small as any design allows,
//! `σ_m = ln(x) / γ_max(x)`. The `w_m` and `v_m` pathways instead fix a
//! design through a chosen `Pr(D|E)`.

use crate::contingency::or_rr_from_risk;
use crate::contingency::RiskParams;
use crate::effect_bounds::{gamma_max, sigma2_v, sigma2_w, v_min, w_min};
use crate::error::{check_finite, check_open_unit, check_positive, domain, Error, Result};
use crate::numerics::{normal_quantile, normal_sf};

/// One-sided P-value to the normal test statistic, `Z = Φ⁻¹(1 - P)`.
pub fn p_to_z(p_value: f64) -> Result<f64> {
    // Φ⁻¹(1 - P) = -Φ⁻¹(P), without rounding 1 - P.
    Ok(-normal_quantile(p_value)?)
}

/// `P = Pr(Z > z) = 1 - Φ(z)`.
pub fn z_to_p(z: f64) -> Result<f64> {
    check_finite("z", z)?;
    Ok(normal_sf(z))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorSpec {
    /// `x` in `Pr(OR > x) = β`.
    pub or_threshold: f64,
    pub beta: f64,
    /// Assumed design standard deviation.
    pub sigma_m: f64,
    /// Prior variance for `μ/σ`.
    pub sigma0: f64,
}

fn check_threshold(x: f64) -> Result<f64> {
    if x > 1.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(domain(format!(
            "odds-ratio threshold must exceed 1, got {x}"
        )))
    }
}

pub fn flattest_prior(or_threshold: f64, beta: f64, sigma_m: f64) -> Result<PriorSpec> {
    check_threshold(or_threshold)?;
    if !(beta > 0.0 && beta < 0.5) {
        return Err(domain(format!("beta must lie in (0, 0.5), got {beta}")));
    }
    check_positive("sigma_m", sigma_m)?;
    let upper = -normal_quantile(beta)?;
    let ratio = (or_threshold.ln() / sigma_m) / upper;
    Ok(PriorSpec {
        or_threshold,
        beta,
        sigma_m,
        sigma0: ratio * ratio,
    })
}

/// Smallest achievable design standard deviation at odds ratio `x`,
/// `ln(x) / γ_max(x)`. Using it as `σ_m` maximizes `σ₀`.
pub fn sigma_m_max(or_threshold: f64) -> Result<f64> {
    check_threshold(or_threshold)?;
    Ok(or_threshold.ln() / gamma_max(or_threshold)?)
}

/// `Pr(D|Ē) = 1 / (1 - OR (1 - 1/Pr(D|E)))`, the unexposed risk that
/// reproduces `or` given the exposed risk.
pub fn unexposed_risk(or: f64, pr_de: f64) -> Result<f64> {
    check_positive("or", or)?;
    check_open_unit("Pr(D|E)", pr_de)?;
    // 1 - OR (1 - 1/Pr(D|E)) = 1 + OR (1 - Pr(D|E)) / Pr(D|E)
    let pr_dne = 1.0 / (1.0 + or * ((1.0 - pr_de) / pr_de));
    if pr_dne > 0.0 && pr_dne < 1.0 {
        Ok(pr_dne)
    } else {
        Err(Error::InconsistentParams(format!(
            "Pr(D|Ē) = {pr_dne} for OR = {or}, Pr(D|E) = {pr_de} lies outside (0, 1)"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignPathway {
    pub pr_dne: f64,
    pub rr: f64,
    /// Minimizing design share: `w_m` or `v_m` depending on the pathway.
    pub share: f64,
    pub sigma: f64,
}

/// `σ(w_m)` for a given odds ratio and exposed risk.
///
/// The exposure probabilities entering the prevalence minimizer are taken
/// as `(p, q) = (Pr(D|E), Pr(D|Ē))`; the odds ratio is symmetric under this
/// exchange, and `p/q` then equals RR in the minimizer, so
/// `w_m = 1 / (1 + RR sqrt(1/OR))`.
pub fn sigma_wm_pathway(or: f64, pr_de: f64) -> Result<DesignPathway> {
    let pr_dne = unexposed_risk(or, pr_de)?;
    let w_m = w_min(pr_de, pr_dne)?;
    Ok(DesignPathway {
        pr_dne,
        rr: pr_de / pr_dne,
        share: w_m,
        sigma: sigma2_w(w_m, pr_de, pr_dne)?.sqrt(),
    })
}

/// `σ(v_m)` for a given odds ratio and exposed risk, using the pooled
/// exposure minimizer directly on the risks.
pub fn sigma_vm_pathway(or: f64, pr_de: f64) -> Result<DesignPathway> {
    let pr_dne = unexposed_risk(or, pr_de)?;
    let risks = RiskParams::new(pr_de, pr_dne, 0.5)?;
    let rr = or_rr_from_risk(&risks).rr;
    let v_m = v_min(rr, or)?;
    Ok(DesignPathway {
        pr_dne,
        rr,
        share: v_m,
        sigma: sigma2_v(v_m, pr_de, pr_dne)?.sqrt(),
    })
}
