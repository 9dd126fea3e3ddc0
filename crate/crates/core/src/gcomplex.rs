//! Complex numbers whose real and imaginary parts live in two different
//! arithmetics X1 and X2.
//!
//! An arithmetic X is given here by its bijection f_X: X -> R, applied with
//! `Bijection::forward`; x ⊕_X y = f_X^{-1}(f_X(x) + f_X(y)). Every operation
//! goes through the base representation x~ = f1(x1) + i f2(x2).

use num_complex::Complex64;
use serde::Serialize;

use crate::arithmetic::ArithmeticContext;
use crate::error::{Error, Result};
use crate::generator::{Bijection, ExtendedGenerator};
use crate::quadrature::{integrate, QuadOptions};

/// x^{1_XY} = f_Y^{-1}(f_X(x)), the first Y-valued power of x in X.
pub fn first_power<X: Bijection, Y: Bijection>(x: f64, from: &X, to: &Y) -> f64 {
    to.inverse(from.forward(x))
}

/// x^{n_XY} = f_Y^{-1}(f_X(x)^n).
pub fn power_between<X: Bijection, Y: Bijection>(x: f64, n: i32, from: &X, to: &Y) -> f64 {
    to.inverse(from.forward(x).powi(n))
}

/// The real arithmetic X of a bijection f_X, which is level -1 of the
/// hierarchy the bijection generates.
pub fn component_arithmetic<B: Bijection>(f: B) -> ArithmeticContext<B> {
    ArithmeticContext::new(f, -1).expect("level -1 is within every iterate cap")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GComplex {
    pub x1: f64,
    pub x2: f64,
}

impl GComplex {
    pub fn new(x1: f64, x2: f64) -> Self {
        GComplex { x1, x2 }
    }
}

/// The pair (f_{X1}, f_{X2}) defining generalized complex arithmetic.
#[derive(Debug, Clone)]
pub struct PairArithmetic<B1, B2> {
    f1: B1,
    f2: B2,
}

impl Default for PairArithmetic<ExtendedGenerator, ExtendedGenerator> {
    fn default() -> Self {
        PairArithmetic { f1: ExtendedGenerator::sine(), f2: ExtendedGenerator::sine() }
    }
}

fn check_bijection<B: Bijection>(f: &B, which: &str) -> Result<()> {
    let n = 201;
    let xs: Vec<f64> = (0..n).map(|i| -2.0 + 4.0 * (i as f64 + 0.5) / n as f64).collect();
    for w in xs.windows(2) {
        if !(f.forward(w[0]) < f.forward(w[1])) {
            return Err(Error::InvalidGenerator(format!("{which} bijection is not increasing near {}", w[0])));
        }
    }
    for &x in &xs {
        let back = f.forward(f.inverse(x));
        if !((back - x).abs() < 1e-12) {
            return Err(Error::InvalidGenerator(format!("{which} bijection round trip at {x} gives {back}")));
        }
    }
    Ok(())
}

impl<B1: Bijection, B2: Bijection> PairArithmetic<B1, B2> {
    pub fn new(f1: B1, f2: B2) -> Result<Self> {
        check_bijection(&f1, "real-part")?;
        check_bijection(&f2, "imaginary-part")?;
        Ok(PairArithmetic { f1, f2 })
    }

    pub fn real_bijection(&self) -> &B1 {
        &self.f1
    }

    pub fn imag_bijection(&self) -> &B2 {
        &self.f2
    }

    pub fn to_base(&self, u: GComplex) -> Complex64 {
        Complex64::new(self.f1.forward(u.x1), self.f2.forward(u.x2))
    }

    pub fn from_base(&self, z: Complex64) -> GComplex {
        GComplex { x1: self.f1.inverse(z.re), x2: self.f2.inverse(z.im) }
    }

    pub fn zero(&self) -> GComplex {
        self.from_base(Complex64::new(0.0, 0.0))
    }

    pub fn one(&self) -> GComplex {
        self.from_base(Complex64::new(1.0, 0.0))
    }

    /// i' = (0_{X1}, 1_{X2}).
    pub fn i_unit(&self) -> GComplex {
        self.from_base(Complex64::new(0.0, 1.0))
    }

    /// x2^{1_{X2 X1}}: an X2 number read in X1.
    pub fn to_first(&self, x2: f64) -> f64 {
        first_power(x2, &self.f2, &self.f1)
    }

    /// x1^{1_{X1 X2}}.
    pub fn to_second(&self, x1: f64) -> f64 {
        first_power(x1, &self.f1, &self.f2)
    }

    pub fn add(&self, u: GComplex, v: GComplex) -> GComplex {
        self.from_base(self.to_base(u) + self.to_base(v))
    }

    pub fn sub(&self, u: GComplex, v: GComplex) -> GComplex {
        self.from_base(self.to_base(u) - self.to_base(v))
    }

    pub fn mul(&self, u: GComplex, v: GComplex) -> GComplex {
        self.from_base(self.to_base(u) * self.to_base(v))
    }

    pub fn div(&self, u: GComplex, v: GComplex) -> Result<GComplex> {
        let d = self.to_base(v);
        if d.norm_sqr() == 0.0 {
            return Err(Error::DivisionByZero { pullback: 0.0 });
        }
        Ok(self.from_base(self.to_base(u) / d))
    }

    pub fn neg(&self, u: GComplex) -> GComplex {
        self.from_base(-self.to_base(u))
    }

    /// (x1, ⊖_{X2} x2).
    pub fn conj(&self, u: GComplex) -> GComplex {
        self.from_base(self.to_base(u).conj())
    }

    /// u ⊙ u*, whose X2 component is 0_{X2}.
    pub fn modulus_sq(&self, u: GComplex) -> GComplex {
        self.from_base(Complex64::new(self.to_base(u).norm_sqr(), 0.0))
    }

    /// Re u = (x1, 0_{X2}).
    pub fn re(&self, u: GComplex) -> GComplex {
        GComplex { x1: u.x1, x2: self.f2.inverse(0.0) }
    }

    /// Im u = (x2^{1_{X2 X1}}, 0_{X2}); the imaginary part is a real number.
    pub fn im(&self, u: GComplex) -> GComplex {
        GComplex { x1: self.to_first(u.x2), x2: self.f2.inverse(0.0) }
    }

    /// ⟨A|B⟩ over [⊖T⊘2, T⊘2] in X, from the base representations Ã, B̃ on
    /// [-f_X(T)/2, f_X(T)/2]: (f1^{-1}(Re⟨Ã|B̃⟩), f2^{-1}(Im⟨Ã|B̃⟩)).
    pub fn scalar_product<X, FA, FB>(
        &self,
        x_arith: &X,
        t: f64,
        a: FA,
        b: FB,
        breakpoints: &[f64],
        tol: f64,
    ) -> Result<GComplex>
    where
        X: Bijection,
        FA: Fn(f64) -> Complex64,
        FB: Fn(f64) -> Complex64,
    {
        let half = 0.5 * x_arith.forward(t);
        if !(half.is_finite() && half > 0.0) {
            return Err(Error::Domain { what: "scalar product domain length", value: t });
        }
        let opts = QuadOptions::with_tol(tol);
        let integrand = |r: f64| a(r).conj() * b(r);
        let re = integrate(|r| integrand(r).re, -half, half, breakpoints, &opts)?;
        let im = integrate(|r| integrand(r).im, -half, half, breakpoints, &opts)?;
        if !(re.converged && im.converged) {
            return Err(Error::Integration {
                estimate: re.value,
                error_estimate: re.error_estimate.max(im.error_estimate),
            });
        }
        Ok(self.from_base(Complex64::new(re.value, im.value)))
    }
}
