//! Binomial distributions read at two levels, their moments, the level form
//! of the Bernoulli law of large numbers and a Monte Carlo check of it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::arithmetic::{compensated_sum, ArithmeticContext};
use crate::error::{check_probability, Error, Result};
use crate::generator::Bijection;
use crate::probability::level_shift;

/// Largest N whose binomial coefficients are built from exact integers.
pub const EXACT_COEFFICIENT_MAX: u64 = 50;

/// C(n, k). Exact below `EXACT_COEFFICIENT_MAX`, from a log-space sum above.
pub fn binomial_coefficient(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    if n <= EXACT_COEFFICIENT_MAX {
        let mut c: u128 = 1;
        for i in 1..=u128::from(k) {
            c = c * (u128::from(n - k) + i) / i;
        }
        c as f64
    } else {
        ln_binomial(n, k).exp()
    }
}

fn ln_binomial(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum()
}

/// n successes in N trials with success probability g^k(p), seen from level l.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelBinomial {
    pub trials: u64,
    pub p: f64,
    pub k: i32,
    pub l: i32,
}

impl LevelBinomial {
    pub fn new(trials: u64, p: f64, k: i32, l: i32) -> Result<Self> {
        if trials == 0 {
            return Err(Error::InvalidInput("a binomial distribution needs at least one trial".into()));
        }
        check_probability("success probability", p)?;
        Ok(LevelBinomial { trials, p, k, l })
    }

    /// (g^{k-l}(p), g^{k-l}(q)): the success and failure probabilities of
    /// the equivalent level-0 experiment.
    pub fn effective<B: Bijection>(&self, bij: &B) -> Result<(f64, f64)> {
        bij.check_level(i64::from(self.l))?;
        let shift = self.k - self.l;
        Ok((level_shift(bij, self.p, shift)?, level_shift(bij, 1.0 - self.p, shift)?))
    }

    /// C(N,n) g^{k-l}(q)^{N-n} g^{k-l}(p)^n, before lifting to level l.
    pub fn pmf_base<B: Bijection>(&self, bij: &B, n: u64) -> Result<f64> {
        if n > self.trials {
            return Err(Error::InvalidInput(format!("{n} successes out of {} trials", self.trials)));
        }
        let (pp, qq) = self.effective(bij)?;
        let big_n = self.trials;
        if big_n <= EXACT_COEFFICIENT_MAX {
            let c = binomial_coefficient(big_n, n);
            return Ok(c * qq.powi((big_n - n) as i32) * pp.powi(n as i32));
        }
        // zero probabilities make the log form 0 * -inf
        if pp == 0.0 || qq == 0.0 {
            let certain = if pp == 0.0 { 0 } else { big_n };
            return Ok(if n == certain { 1.0 } else { 0.0 });
        }
        let ln = ln_binomial(big_n, n) + (big_n - n) as f64 * qq.ln() + n as f64 * pp.ln();
        Ok(ln.exp())
    }

    pub fn pmf<B: Bijection>(&self, bij: &B, n: u64) -> Result<f64> {
        Ok(bij.iterate(self.l, self.pmf_base(bij, n)?))
    }

    /// The level-l sum of the pmf over all outcomes.
    pub fn total<B: Bijection>(&self, bij: &B) -> Result<f64> {
        let ctx = ArithmeticContext::new(bij, self.l)?;
        let terms = (0..=self.trials).map(|n| self.pmf(bij, n)).collect::<Result<Vec<_>>>()?;
        Ok(ctx.sum(terms))
    }

    /// (mean, variance) = (g^l(N P), g^l(N P Q)) with P, Q the effective
    /// probabilities.
    pub fn moments<B: Bijection>(&self, bij: &B) -> Result<(f64, f64)> {
        let (pp, qq) = self.effective(bij)?;
        let n = self.trials as f64;
        Ok((bij.iterate(self.l, n * pp), bij.iterate(self.l, n * pp * qq)))
    }

    /// The same moments from their definitions as level-l sums,
    /// ⊕ n ⊙ p(n) and ⊕ (n ⊖ mean)² ⊙ p(n).
    ///
    /// Nested level-l operations are composed on pullbacks and pushed once:
    /// pushing every intermediate product rounds values near integers, where
    /// the next pullback cannot recover them.
    pub fn moments_by_summation<B: Bijection>(&self, bij: &B) -> Result<(f64, f64)> {
        let ctx = ArithmeticContext::new(bij, self.l)?;
        let probs = (0..=self.trials)
            .map(|n| Ok(ctx.pull(self.pmf(bij, n)?)))
            .collect::<Result<Vec<_>>>()?;
        let natural = |n: usize| ctx.pull(ctx.embed_natural(n as i64));
        let mean = compensated_sum(probs.iter().enumerate().map(|(n, &p)| natural(n) * p));
        let var = compensated_sum(probs.iter().enumerate().map(|(n, &p)| (natural(n) - mean).powi(2) * p));
        Ok((ctx.push(mean), ctx.push(var)))
    }

    /// The level-l bound g^l(PQ/(N eps²)) on the probability of a deviation
    /// of at least eps. Requires N >= PQ/eps² so the argument is at most 1.
    pub fn chebyshev_bound<B: Bijection>(&self, bij: &B, eps: f64) -> Result<f64> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Domain { what: "deviation eps", value: eps });
        }
        let (pp, qq) = self.effective(bij)?;
        let min_n = pp * qq / (eps * eps);
        if (self.trials as f64) < min_n {
            return Err(Error::Applicability { trials: self.trials, min_trials: min_n.ceil() as u64 });
        }
        Ok(bij.iterate(self.l, pp * qq / (self.trials as f64 * eps * eps)))
    }

    /// Draws `trials` binomial samples at the effective probability and
    /// counts deviations |P - n/N| >= eps. Trial i uses stream i of a ChaCha8
    /// generator seeded with `seed`, so the result does not depend on threads.
    pub fn simulate<B: Bijection>(&self, bij: &B, eps: f64, trials: u64, seed: u64) -> Result<SimulationReport> {
        if trials == 0 {
            return Err(Error::InvalidInput("simulation needs at least one trial".into()));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Domain { what: "deviation eps", value: eps });
        }
        let (pp, qq) = self.effective(bij)?;
        let dist = Binomial::new(self.trials, pp)
            .map_err(|e| Error::InvalidInput(format!("binomial sampler: {e}")))?;
        let big_n = self.trials as f64;
        let exceed = (0..trials)
            .into_par_iter()
            .filter(|&t| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(t);
                let n = dist.sample(&mut rng) as f64;
                (pp - n / big_n).abs() >= eps
            })
            .count() as u64;
        let rate = exceed as f64 / trials as f64;
        let bound = pp * qq / (big_n * eps * eps);
        let b = bound.min(1.0);
        Ok(SimulationReport {
            trials,
            exceed_count: exceed,
            empirical_exceed_rate: rate,
            bound,
            standard_error: (b * (1.0 - b) / trials as f64).sqrt(),
            effective_p: pp,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationReport {
    pub trials: u64,
    pub exceed_count: u64,
    pub empirical_exceed_rate: f64,
    /// Level-0 bound PQ/(N eps²).
    pub bound: f64,
    /// Standard error of a rate equal to the bound.
    pub standard_error: f64,
    pub effective_p: f64,
}

impl SimulationReport {
    pub fn within_bound(&self, sigmas: f64) -> bool {
        self.empirical_exceed_rate <= self.bound + sigmas * self.standard_error
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fig3Row {
    pub level: i32,
    #[serde(rename = "N")]
    pub n: u64,
    pub bound: f64,
}

/// g^l(1/(4 N eps²)) for a symmetric coin, one row per level and N.
pub fn fig3_table<B: Bijection>(
    bij: &B,
    levels: &[i32],
    n_range: std::ops::RangeInclusive<u64>,
    eps: f64,
) -> Result<Vec<Fig3Row>> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Domain { what: "deviation eps", value: eps });
    }
    if n_range.is_empty() || *n_range.start() == 0 {
        return Err(Error::InvalidInput(format!("invalid trial range {n_range:?}")));
    }
    let mut rows = Vec::new();
    for &l in levels {
        bij.check_level(i64::from(l))?;
        for n in n_range.clone() {
            let bound = bij.iterate(l, 1.0 / (4.0 * n as f64 * eps * eps));
            rows.push(Fig3Row { level: l, n, bound });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::ExtendedGenerator;
    use crate::probability::level_residual;
    use proptest::prelude::*;

    fn sine() -> ExtendedGenerator {
        ExtendedGenerator::sine()
    }

    #[test]
    fn coefficients() {
        assert_eq!(binomial_coefficient(5, 2), 10.0);
        assert_eq!(binomial_coefficient(50, 25), 126_410_606_437_752.0);
        assert_eq!(binomial_coefficient(3, 4), 0.0);
        let c = binomial_coefficient(60, 30);
        assert!((c / 118_264_581_564_861_424.0 - 1.0).abs() < 1e-13);
    }

    #[test]
    fn pmf_examples() {
        let g = sine();
        for k in [-3, 0, 4] {
            let d = LevelBinomial::new(2, 0.5, k, 0).unwrap();
            let v: Vec<f64> = (0..=2).map(|n| d.pmf(&g, n).unwrap()).collect();
            assert_eq!(v, vec![0.25, 0.5, 0.25]);
        }
        let d = LevelBinomial::new(1, 0.3, 0, 0).unwrap();
        assert!((d.pmf(&g, 0).unwrap() - 0.7).abs() < 1e-16);
        assert_eq!(d.pmf(&g, 1).unwrap(), 0.3);
        let d = LevelBinomial::new(3, 0.25, 1, 0).unwrap();
        assert!((d.pmf(&g, 0).unwrap() - 0.621_859_216_769_114_54).abs() < 1e-15);
        assert!(d.pmf(&g, 4).is_err());
        assert!(LevelBinomial::new(0, 0.5, 0, 0).is_err());
    }

    #[test]
    fn large_n_uses_logs() {
        let g = sine();
        let d = LevelBinomial::new(200, 0.4, 0, 0).unwrap();
        let s: f64 = (0..=200).map(|n| d.pmf(&g, n).unwrap()).sum();
        assert!((s - 1.0).abs() < 1e-12);
        let d = LevelBinomial::new(80, 0.0, 0, 0).unwrap();
        assert_eq!(d.pmf(&g, 0).unwrap(), 1.0);
        assert_eq!(d.pmf(&g, 3).unwrap(), 0.0);
    }

    #[test]
    fn moment_examples() {
        let g = sine();
        let d = LevelBinomial::new(100, 0.5, 2, 0).unwrap();
        assert_eq!(d.moments(&g).unwrap(), (50.0, 25.0));
        let d = LevelBinomial::new(10, 0.25, 1, 0).unwrap();
        assert!((d.moments(&g).unwrap().0 - 1.464_466_094_067_262_4).abs() < 1e-14);
        // l = k: the mean is N_l ⊙_l g^k(p)
        let d = LevelBinomial::new(7, 0.3, 2, 2).unwrap();
        let ctx = ArithmeticContext::new(&g, 2).unwrap();
        let alt = ctx.mul(ctx.embed_natural(7), g.iterate(2, 0.3));
        assert!((d.moments(&g).unwrap().0 - alt).abs() < 1e-12);
    }

    #[test]
    fn bound_examples() {
        let g = sine();
        let d = |n, l| LevelBinomial::new(n, 0.5, 0, l).unwrap();
        assert_eq!(d(50, 1).chebyshev_bound(&g, 0.1).unwrap(), 0.5);
        assert!((d(25, 1).chebyshev_bound(&g, 0.1).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(d(50, 3).chebyshev_bound(&g, 0.1).unwrap(), 0.5);
        match d(24, 1).chebyshev_bound(&g, 0.1) {
            Err(Error::Applicability { min_trials, .. }) => assert_eq!(min_trials, 25),
            other => panic!("{other:?}"),
        }
        assert!(d(50, 1).chebyshev_bound(&g, 0.0).is_err());
    }

    #[test]
    fn fig3() {
        let g = sine();
        let rows = fig3_table(&g, &[1, 2, 3, 4], 25..=75, 0.1).unwrap();
        assert_eq!(rows.len(), 4 * 51);
        for r in rows.iter().filter(|r| r.n == 50) {
            assert_eq!(r.bound, 0.5);
        }
        let r = rows.iter().find(|r| r.level == 1 && r.n == 75).unwrap();
        assert!((r.bound - 0.25).abs() < 1e-15);
        let r = rows.iter().find(|r| r.level == 4 && r.n == 25).unwrap();
        assert!((r.bound - 1.0).abs() < 1e-15);
        for w in rows.windows(2).filter(|w| w[0].level == w[1].level) {
            assert!(w[1].bound <= w[0].bound);
        }
    }

    #[test]
    fn simulation_examples() {
        let g = sine();
        let d = LevelBinomial::new(10_000, 0.5, 2, 2).unwrap();
        let r = d.simulate(&g, 0.05, 2000, 7).unwrap();
        assert_eq!(r.exceed_count, 0);
        assert!((r.bound - 0.01).abs() < 1e-15);
        assert_eq!(r, d.simulate(&g, 0.05, 2000, 7).unwrap());
        let r = LevelBinomial::new(50, 0.3, 0, 0).unwrap().simulate(&g, 1.0, 500, 1).unwrap();
        assert_eq!(r.empirical_exceed_rate, 0.0);
        let r = LevelBinomial::new(1, 0.5, 0, 0).unwrap().simulate(&g, 0.4, 500, 1).unwrap();
        assert_eq!(r.empirical_exceed_rate, 1.0);
    }

    #[test]
    fn simulation_is_sound_across_seeds() {
        let g = sine();
        let d = LevelBinomial::new(100, 0.3, 1, 0).unwrap();
        for seed in 0..20 {
            let r = d.simulate(&g, 0.08, 4000, seed).unwrap();
            assert!(r.within_bound(3.0), "{r:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn pmf_normalized(n in 1u64..=60, p in 0.0f64..=1.0, k in -3i32..=3, l in -3i32..=3) {
            let g = sine();
            let d = LevelBinomial::new(n, p, k, l).unwrap();
            let s = d.total(&g).unwrap();
            prop_assert!(level_residual(&g, s, l) < 1e-9);
            if l >= 0 {
                prop_assert!((s - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn moments_agree(n in 1u64..=40, p in 0.0f64..=1.0, k in -3i32..=3, l in -3i32..=3) {
            let g = sine();
            let d = LevelBinomial::new(n, p, k, l).unwrap();
            let (m, v) = d.moments(&g).unwrap();
            let (ms, vs) = d.moments_by_summation(&g).unwrap();
            // below level 0 the push f^|l| is steep near integers, so values
            // are compared by their pullbacks there
            let ctx = ArithmeticContext::new(&g, l).unwrap();
            prop_assert!(ctx.pulled_distance(m, ms) < 1e-8, "mean {} vs {}", m, ms);
            prop_assert!(ctx.pulled_distance(v, vs) < 1e-8, "variance {} vs {}", v, vs);
            if l >= 0 {
                prop_assert!((m - ms).abs() < 1e-8 && (v - vs).abs() < 1e-8);
            }
        }

        #[test]
        fn bound_monotone(n in 25u64..500, eps in 0.1f64..0.5, l in 0i32..=2) {
            let g = sine();
            let d = LevelBinomial::new(n, 0.5, 0, l).unwrap();
            let b = d.chebyshev_bound(&g, eps).unwrap();
            let more = LevelBinomial::new(n + 1, 0.5, 0, l).unwrap().chebyshev_bound(&g, eps).unwrap();
            prop_assert!(more < b);
            prop_assert!(d.chebyshev_bound(&g, eps * 1.01).unwrap() < b);
        }
    }
}
