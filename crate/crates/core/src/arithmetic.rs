//! The projected arithmetic of level k: x op_k y = g^k(g^-k(x) op g^-k(y)).

use std::cmp::Ordering;
use std::fmt;
use std::num::NonZeroU32;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::generator::Bijection;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

impl Op {
    pub const ALL: [Op; 4] = [Op::Add, Op::Sub, Op::Mul, Op::Div];

    /// The ordinary operation on pulled-back values.
    pub fn apply(self, a: f64, b: f64) -> Result<f64> {
        Ok(match self {
            Op::Add => a + b,
            Op::Sub => a - b,
            Op::Mul => a * b,
            Op::Div => {
                if b == 0.0 {
                    return Err(Error::DivisionByZero { pullback: b });
                }
                a / b
            }
        })
    }
}

impl FromStr for Op {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "add" | "+" => Ok(Op::Add),
            "sub" | "-" => Ok(Op::Sub),
            "mul" | "*" => Ok(Op::Mul),
            "div" | "/" => Ok(Op::Div),
            _ => Err(Error::InvalidInput(format!("unknown operation '{s}'"))),
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Div => "div",
        })
    }
}

/// Arithmetic of level k over a bijection g.
#[derive(Debug, Clone)]
pub struct ArithmeticContext<B> {
    bijection: B,
    level: i32,
}

impl<B: Bijection> ArithmeticContext<B> {
    pub fn new(bijection: B, level: i32) -> Result<Self> {
        bijection.check_level(i64::from(level))?;
        Ok(ArithmeticContext { bijection, level })
    }

    pub fn level(&self) -> i32 {
        self.level
    }

    pub fn bijection(&self) -> &B {
        &self.bijection
    }

    /// g^-k(x)
    pub fn pull(&self, x: f64) -> f64 {
        self.bijection.iterate(-self.level, x)
    }

    /// g^k(r)
    pub fn push(&self, r: f64) -> f64 {
        self.bijection.iterate(self.level, r)
    }

    pub fn zero(&self) -> f64 {
        self.push(0.0)
    }

    pub fn one(&self) -> f64 {
        self.push(1.0)
    }

    pub fn arith(&self, op: Op, x: f64, y: f64) -> Result<f64> {
        let (a, b) = (self.pull(x), self.pull(y));
        if op == Op::Div && b == 0.0 {
            return Err(Error::DivisionByZero { pullback: b });
        }
        Ok(self.push(op.apply(a, b)?))
    }

    pub fn add(&self, x: f64, y: f64) -> f64 {
        self.push(self.pull(x) + self.pull(y))
    }

    pub fn sub(&self, x: f64, y: f64) -> f64 {
        self.push(self.pull(x) - self.pull(y))
    }

    pub fn mul(&self, x: f64, y: f64) -> f64 {
        self.push(self.pull(x) * self.pull(y))
    }

    pub fn div(&self, x: f64, y: f64) -> Result<f64> {
        self.arith(Op::Div, x, y)
    }

    /// Additive inverse: 0_k minus x.
    pub fn neg(&self, x: f64) -> f64 {
        self.push(-self.pull(x))
    }

    /// n-ary sum; each term is pulled back once and the total pushed once.
    pub fn sum<I: IntoIterator<Item = f64>>(&self, xs: I) -> f64 {
        self.push(compensated_sum(xs.into_iter().map(|x| self.pull(x))))
    }

    pub fn product<I: IntoIterator<Item = f64>>(&self, xs: I) -> f64 {
        self.push(xs.into_iter().map(|x| self.pull(x)).product())
    }

    /// n_k = g^k(n).
    pub fn embed_natural(&self, n: i64) -> f64 {
        self.push(n as f64)
    }

    /// g^k(n/m), equal to n_k divided by m_k at level k.
    pub fn embed_rational(&self, n: i64, m: i64) -> Result<f64> {
        if m == 0 {
            return Err(Error::DivisionByZero { pullback: 0.0 });
        }
        Ok(self.push(n as f64 / m as f64))
    }

    /// n-fold level product of x with itself.
    pub fn power(&self, x: f64, n: NonZeroU32) -> f64 {
        if n.get() == 1 {
            return x;
        }
        let r = self.pull(x);
        let v = match i32::try_from(n.get()) {
            Ok(e) => r.powi(e),
            Err(_) => r.powf(f64::from(n.get())),
        };
        self.push(v)
    }

    /// Distance from x to y measured in the arithmetic: |g^-k(x) - g^-k(y)|.
    pub fn pulled_distance(&self, x: f64, y: f64) -> f64 {
        (self.pull(x) - self.pull(y)).abs()
    }
}

/// The ordering of R. Every level shares it since g^k is strictly increasing.
pub fn compare(x: f64, y: f64) -> Ordering {
    x.total_cmp(&y)
}

/// Index of the first maximum.
pub fn argmax(xs: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, x) in xs.iter().enumerate() {
        match best {
            Some(b) if compare(*x, xs[b]) != Ordering::Greater => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Neumaier summation.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut c = 0.0_f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}
