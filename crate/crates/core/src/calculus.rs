//! Non-Newtonian derivative and integral of maps between arithmetics.
//!
//! A map A_lk from level k to level l is stored through its base A00:
//! A_lk = g^l . A00 . f^k. The derivative is g^l(A00'(f^k x)) and the
//! integral over [a, b] is g^l of the ordinary integral of A00 over
//! [f^k a, f^k b].

use crate::error::{Error, Result};
use crate::generator::Bijection;
use crate::quadrature::{integrate, QuadOptions, QuadResult};

#[derive(Debug, Clone)]
pub struct LevelFunction<F> {
    base: F,
    source_level: i32,
    target_level: i32,
    breakpoints: Vec<f64>,
}

impl<F: Fn(f64) -> f64> LevelFunction<F> {
    /// A map from level `source_level` (k) to level `target_level` (l).
    pub fn new(base: F, source_level: i32, target_level: i32) -> Self {
        LevelFunction { base, source_level, target_level, breakpoints: Vec::new() }
    }

    /// Discontinuities of the base, in the base domain.
    pub fn with_breakpoints(mut self, mut bp: Vec<f64>) -> Self {
        bp.retain(|x| x.is_finite());
        bp.sort_by(f64::total_cmp);
        bp.dedup();
        self.breakpoints = bp;
        self
    }

    pub fn source_level(&self) -> i32 {
        self.source_level
    }

    pub fn target_level(&self) -> i32 {
        self.target_level
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn base_value(&self, r: f64) -> f64 {
        (self.base)(r)
    }

    /// g^l(A00(f^k(x))).
    pub fn value<B: Bijection>(&self, bij: &B, x: f64) -> f64 {
        bij.iterate(self.target_level, (self.base)(bij.iterate(-self.source_level, x)))
    }

    /// The same base read between other levels: A_mn from A_lk.
    pub fn relevel(&self, source_level: i32, target_level: i32) -> LevelFunction<&F> {
        LevelFunction {
            base: &self.base,
            source_level,
            target_level,
            breakpoints: self.breakpoints.clone(),
        }
    }

    fn check_levels<B: Bijection>(&self, bij: &B) -> Result<()> {
        bij.check_level(i64::from(self.source_level))?;
        bij.check_level(i64::from(self.target_level))
    }
}

/// Central difference on the base with one Richardson step.
pub fn base_derivative<F: Fn(f64) -> f64>(base: F, r: f64, step: Option<f64>) -> Result<f64> {
    let h = match step {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => return Err(Error::Domain { what: "derivative step", value: h }),
        None => r.abs().max(1.0) * f64::EPSILON.cbrt(),
    };
    let diff = |h: f64| -> Result<f64> {
        let (hi, lo) = (base(r + h), base(r - h));
        if !hi.is_finite() {
            return Err(Error::NumericDomain { at: r + h, value: hi });
        }
        if !lo.is_finite() {
            return Err(Error::NumericDomain { at: r - h, value: lo });
        }
        Ok((hi - lo) / (2.0 * h))
    };
    let d1 = diff(h)?;
    let d2 = diff(0.5 * h)?;
    Ok((4.0 * d2 - d1) / 3.0)
}

pub fn nn_derivative<B: Bijection, F: Fn(f64) -> f64>(
    bij: &B,
    func: &LevelFunction<F>,
    x: f64,
    step: Option<f64>,
) -> Result<f64> {
    func.check_levels(bij)?;
    let r = bij.iterate(-func.source_level, x);
    if !r.is_finite() {
        return Err(Error::NumericDomain { at: x, value: r });
    }
    let d = base_derivative(&func.base, r, step)?;
    Ok(bij.iterate(func.target_level, d))
}

/// Integral plus quadrature diagnostics; the value is already lifted by g^l.
pub fn nn_integral_detailed<B: Bijection, F: Fn(f64) -> f64>(
    bij: &B,
    func: &LevelFunction<F>,
    a: f64,
    b: f64,
    opts: &QuadOptions,
) -> Result<QuadResult> {
    func.check_levels(bij)?;
    let lo = bij.iterate(-func.source_level, a);
    let hi = bij.iterate(-func.source_level, b);
    let mut q = integrate(&func.base, lo, hi, &func.breakpoints, opts)?;
    q.value = bij.iterate(func.target_level, q.value);
    Ok(q)
}

pub fn nn_integral<B: Bijection, F: Fn(f64) -> f64>(
    bij: &B,
    func: &LevelFunction<F>,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64> {
    let q = nn_integral_detailed(bij, func, a, b, &QuadOptions::with_tol(tol))?;
    if !q.converged {
        return Err(Error::Integration { estimate: q.value, error_estimate: q.error_estimate });
    }
    Ok(q.value)
}

/// The derivative of `func` as a map from level k to level l. Its base is
/// the ordinary derivative of the base of `func`.
pub fn derivative_function<F: Fn(f64) -> f64>(func: &LevelFunction<F>) -> LevelFunction<impl Fn(f64) -> f64 + '_> {
    let base = move |r: f64| base_derivative(&func.base, r, None).unwrap_or(f64::NAN);
    LevelFunction::new(base, func.source_level, func.target_level)
}

/// x -> integral of `func` from `a` to x, as a map from level k to level l.
/// Its base is r -> ordinary integral of the base of `func` from f^k(a) to r.
pub fn running_integral<'a, B: Bijection, F: Fn(f64) -> f64>(
    bij: &B,
    func: &'a LevelFunction<F>,
    a: f64,
    tol: f64,
) -> LevelFunction<impl Fn(f64) -> f64 + 'a> {
    let lo = bij.iterate(-func.source_level, a);
    let opts = QuadOptions::with_tol(tol);
    let base = move |r: f64| match integrate(&func.base, lo, r, &func.breakpoints, &opts) {
        Ok(q) if q.converged => q.value,
        _ => f64::NAN,
    };
    LevelFunction::new(base, func.source_level, func.target_level)
}

/// Right-hand side of the cross-level chain rule for derivatives:
/// g^(l-m) of the derivative of A_mn at y = f^(k-n)(x).
pub fn chain_rule_derivative<B: Bijection, F: Fn(f64) -> f64>(
    bij: &B,
    func: &LevelFunction<F>,
    n: i32,
    m: i32,
    x: f64,
) -> Result<f64> {
    let (k, l) = (func.source_level, func.target_level);
    for lvl in [n, m, k - n, l - m] {
        bij.check_level(i64::from(lvl))?;
    }
    let y = bij.iterate(n - k, x);
    let inner = nn_derivative(bij, &func.relevel(n, m), y, None)?;
    Ok(bij.iterate(l - m, inner))
}

/// Right-hand side of the cross-level change of representation for
/// integrals: g^(l-m) of the integral of A_mn over [f^(k-n) a, f^(k-n) b].
pub fn chain_rule_integral<B: Bijection, F: Fn(f64) -> f64>(
    bij: &B,
    func: &LevelFunction<F>,
    n: i32,
    m: i32,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64> {
    let (k, l) = (func.source_level, func.target_level);
    for lvl in [n, m, k - n, l - m] {
        bij.check_level(i64::from(lvl))?;
    }
    let (ya, yb) = (bij.iterate(n - k, a), bij.iterate(n - k, b));
    let inner = nn_integral(bij, &func.relevel(n, m), ya, yb, tol)?;
    Ok(bij.iterate(l - m, inner))
}

/// exp_lk(x) = g^l(exp(f^k x)).
pub fn nn_exp<B: Bijection>(bij: &B, l: i32, k: i32, x: f64) -> Result<f64> {
    bij.check_level(i64::from(l))?;
    bij.check_level(i64::from(k))?;
    Ok(bij.iterate(l, bij.iterate(-k, x).exp()))
}

/// ln_kl(x) = g^k(ln(f^l x)), the inverse of exp_lk.
pub fn nn_ln<B: Bijection>(bij: &B, k: i32, l: i32, x: f64) -> Result<f64> {
    bij.check_level(i64::from(l))?;
    bij.check_level(i64::from(k))?;
    let r = bij.iterate(-l, x);
    if !(r > 0.0) {
        return Err(Error::LogOfNonPositive { pullback: r });
    }
    Ok(bij.iterate(k, r.ln()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::ArithmeticContext;
    use crate::generator::{ExtendedGenerator, IdentityMap};
    use proptest::prelude::*;
    use std::f64::consts::{E, PI};

    #[test]
    fn derivative_examples() {
        let id = IdentityMap;
        let f = LevelFunction::new(|r| r, 0, 0);
        assert!((nn_derivative(&id, &f, 3.0, None).unwrap() - 1.0).abs() < 1e-10);
        let sq = LevelFunction::new(|r: f64| r * r, 0, 0);
        assert!((nn_derivative(&id, &sq, 2.0, None).unwrap() - 4.0).abs() < 1e-9);
        let g = ExtendedGenerator::sine();
        let e = LevelFunction::new(f64::exp, 1, 1);
        let d = nn_derivative(&g, &e, 0.3, None).unwrap();
        assert!((d - 1.416_051_257_078_146_2).abs() < 1e-9);
        let bad = LevelFunction::new(|r: f64| r.ln(), 0, 0);
        assert!(matches!(nn_derivative(&id, &bad, 0.0, None), Err(Error::NumericDomain { .. })));
    }

    #[test]
    fn integral_examples() {
        let id = IdentityMap;
        let f = LevelFunction::new(|r| r, 0, 0);
        assert!((nn_integral(&id, &f, 0.0, 1.0, 1e-12).unwrap() - 0.5).abs() < 1e-14);
        let rho = LevelFunction::new(|_| 1.0 / (2.0 * PI), 0, 0);
        assert!((nn_integral(&id, &rho, 0.0, 2.0 * PI, 1e-12).unwrap() - 1.0).abs() < 1e-14);
        let g = ExtendedGenerator::sine();
        assert!(nn_integral(&g, &LevelFunction::new(|r| r, 99, 0), 0.0, 1.0, 1e-9).is_err());
    }

    #[test]
    fn integration_failure_carries_estimate() {
        let id = IdentityMap;
        // jump at an undeclared point with a tolerance below what Simpson can reach
        let f = LevelFunction::new(|r: f64| if r < 0.123_456_789 { 0.0 } else { 1.0 }, 0, 0);
        match nn_integral(&id, &f, 0.0, 1.0, 1e-300) {
            Err(Error::Integration { estimate, .. }) => assert!((estimate - 0.876_543_211).abs() < 1e-6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn exp_ln() {
        let g = ExtendedGenerator::sine();
        assert_eq!(nn_exp(&IdentityMap, 0, 0, 0.0).unwrap(), 1.0);
        assert_eq!(nn_exp(&g, 1, 1, 0.0).unwrap(), 1.0);
        assert_eq!(nn_ln(&g, 1, 0, E).unwrap(), 1.0);
        assert!(matches!(nn_ln(&g, 1, 1, 0.0), Err(Error::LogOfNonPositive { .. })));
        assert!(matches!(nn_ln(&g, 1, 1, -0.2), Err(Error::LogOfNonPositive { .. })));
        assert!((nn_exp(&g, 1, 1, 0.3).unwrap() - 1.416_051_257_078_146_2).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn exp_ln_inverse(x in 0.2f64..0.8, k in -2i32..=2, l in -2i32..=2) {
            let g = ExtendedGenerator::sine();
            let y = nn_exp(&g, l, k, x).unwrap();
            prop_assert!((nn_ln(&g, k, l, y).unwrap() - x).abs() < 1e-9);
        }

        #[test]
        fn exp_homomorphism(x in 0.1f64..0.4, y in 0.1f64..0.4, k in -2i32..=2, l in -2i32..=2) {
            let g = ExtendedGenerator::sine();
            let ck = ArithmeticContext::new(&g, k).unwrap();
            let cl = ArithmeticContext::new(&g, l).unwrap();
            let lhs = nn_exp(&g, l, k, ck.add(x, y)).unwrap();
            let rhs = cl.mul(nn_exp(&g, l, k, x).unwrap(), nn_exp(&g, l, k, y).unwrap());
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }

        #[test]
        fn integral_is_linear(c in 0.1f64..0.9, k in -2i32..=2, l in -2i32..=2) {
            let g = ExtendedGenerator::sine();
            let cl = ArithmeticContext::new(&g, l).unwrap();
            let a = LevelFunction::new(|r: f64| 1.0 + r * r, k, l);
            let b = LevelFunction::new(|r: f64| (r).cos() + 1.5, k, l);
            let (x0, x1) = (g.iterate(k, 0.1), g.iterate(k, 0.8));
            let sum = LevelFunction::new(|r: f64| 2.5 + r * r + r.cos(), k, l);
            let ia = nn_integral(&g, &a, x0, x1, 1e-12).unwrap();
            let ib = nn_integral(&g, &b, x0, x1, 1e-12).unwrap();
            let is = nn_integral(&g, &sum, x0, x1, 1e-12).unwrap();
            prop_assert!((is - cl.add(ia, ib)).abs() < 1e-7);
            let cr = cl.pull(c);
            let scaled = LevelFunction::new(|r: f64| cr * (r.cos() + 1.5), k, l);
            let isc = nn_integral(&g, &scaled, x0, x1, 1e-12).unwrap();
            prop_assert!((isc - cl.mul(c, ib)).abs() < 1e-7);
        }

        #[test]
        fn leibniz(x in 0.05f64..0.95, k in -2i32..=2, l in -2i32..=2) {
            let g = ExtendedGenerator::sine();
            let cl = ArithmeticContext::new(&g, l).unwrap();
            let a = LevelFunction::new(|r: f64| 1.0 + r, k, l);
            let b = LevelFunction::new(|r: f64| r.exp(), k, l);
            let ab = LevelFunction::new(|r: f64| (1.0 + r) * r.exp(), k, l);
            let lhs = nn_derivative(&g, &ab, x, None).unwrap();
            let rhs = cl.add(
                cl.mul(nn_derivative(&g, &a, x, None).unwrap(), b.value(&g, x)),
                cl.mul(a.value(&g, x), nn_derivative(&g, &b, x, None).unwrap()),
            );
            prop_assert!((lhs - rhs).abs() < 1e-5);
        }
    }
}
