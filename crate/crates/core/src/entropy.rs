//! Rényi entropy as a Kolmogorov-Nagumo average of the Shannon information.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::generator::Bijection;

/// Below this distance from α = 1 the Shannon entropy is returned.
pub const SHANNON_WINDOW: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidInput("empty distribution".into()));
        }
        if let Some(&p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::Domain { what: "probability", value: p });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidWeights { sum });
        }
        Ok(Distribution { probs })
    }

    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidInput("empty distribution".into()));
        }
        Ok(Distribution { probs: vec![1.0 / m as f64; m] })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Joint distribution of two independent systems.
    pub fn product(&self, other: &Distribution) -> Distribution {
        let probs = self.probs.iter().flat_map(|p| other.probs.iter().map(move |q| p * q)).collect();
        Distribution { probs }
    }

    fn support(&self) -> impl Iterator<Item = f64> + '_ {
        self.probs.iter().copied().filter(|&p| p > 0.0)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { what: "Renyi order alpha", value: alpha })
    }
}

pub fn shannon(dist: &Distribution) -> f64 {
    -dist.support().map(|p| p * p.ln()).sum::<f64>()
}

/// φ_α^{-1}(Σ p φ_α(-ln p)) with φ_α(x) = exp((1-α)x).
pub fn renyi_kn(dist: &Distribution, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let c = 1.0 - alpha;
    if c.abs() < SHANNON_WINDOW {
        return Ok(shannon(dist));
    }
    let phi = |x: f64| (c * x).exp();
    let mean: f64 = dist.support().map(|p| p * phi(-p.ln())).sum();
    Ok(mean.ln() / c)
}

/// ln(Σ p^α)/(1-α).
pub fn renyi_closed(dist: &Distribution, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let c = 1.0 - alpha;
    if c.abs() < SHANNON_WINDOW {
        return Ok(shannon(dist));
    }
    Ok(dist.support().map(|p| p.powf(alpha)).sum::<f64>().ln() / c)
}

/// The entropy written in the arithmetic generated by φ_α, as
/// ⊕_P P ⊙ ln(1/φ_α(P)) with P = φ_α^{-1}(p). Experimental: only checked
/// against the closed form.
pub fn renyi_generalized(dist: &Distribution, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let c = 1.0 - alpha;
    if c.abs() < SHANNON_WINDOW {
        return Err(Error::Domain { what: "alpha of the phi arithmetic (must differ from 1)", value: alpha });
    }
    let phi = |x: f64| (c * x).exp();
    let phi_inv = |y: f64| y.ln() / c;
    let odot = |x: f64, y: f64| phi_inv(phi(x) * phi(y));
    let sum: f64 = dist
        .support()
        .map(|p| {
            let big_p = phi_inv(p);
            phi(odot(big_p, (1.0 / phi(big_p)).ln()))
        })
        .sum();
    Ok(phi_inv(sum))
}

/// g_R(-ln p): the information -ln p negated at level 1, which has the shape
/// of φ_α(-ln p).
pub fn g_log_info<B: Bijection>(bij: &B, p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Domain { what: "probability for log-information (must be in (0,1])", value: p });
    }
    Ok(bij.forward(-p.ln()))
}
