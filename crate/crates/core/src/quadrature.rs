//! Adaptive Simpson quadrature with explicit breakpoints.
//!
//! Pieces between breakpoints are integrated separately and their endpoints
//! are sampled one ulp inside the piece, so a function that jumps at a
//! declared breakpoint is seen as continuous on each piece.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    /// Absolute tolerance on the whole integral.
    pub tol: f64,
    pub max_depth: u32,
    pub max_evals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { tol: 1e-10, max_depth: 50, max_evals: 10_000_000 }
    }
}

impl QuadOptions {
    pub fn with_tol(tol: f64) -> Self {
        QuadOptions { tol, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub converged: bool,
    pub evaluations: usize,
}

struct State<'a, F> {
    f: &'a F,
    evals: usize,
    max_evals: usize,
    error: f64,
    converged: bool,
}

impl<F: Fn(f64) -> f64> State<'_, F> {
    fn eval(&mut self, x: f64) -> Result<f64> {
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NumericDomain { at: x, value: v })
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn step(
        &mut self,
        a: f64,
        fa: f64,
        m: f64,
        fm: f64,
        b: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        if !(a < lm && lm < m && m < rm && rm < b) {
            // interval exhausted at double precision
            self.converged = false;
            return Ok(whole);
        }
        let flm = self.eval(lm)?;
        let frm = self.eval(rm)?;
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            self.error += delta.abs() / 15.0;
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 || self.evals >= self.max_evals {
            self.converged = false;
            self.error += delta.abs() / 15.0;
            return Ok(left + right + delta / 15.0);
        }
        let l = self.step(a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1)?;
        let r = self.step(m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1)?;
        Ok(l + r)
    }

    fn piece(&mut self, u: f64, v: f64, tol: f64, depth: u32) -> Result<f64> {
        let fu = self.eval(u.next_up().min(v))?;
        let fv = self.eval(v.next_down().max(u))?;
        let m = 0.5 * (u + v);
        let fm = self.eval(m)?;
        let whole = (v - u) / 6.0 * (fu + 4.0 * fm + fv);
        self.step(u, fu, m, fm, v, fv, whole, tol, depth)
    }
}

/// Integral of `f` over [a, b] (oriented), split at the given breakpoints.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    opts: &QuadOptions,
) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidInput(format!("integration limits [{a}, {b}] must be finite")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Domain { what: "quadrature tolerance", value: opts.tol });
    }
    if a == b {
        return Ok(QuadResult { value: 0.0, error_estimate: 0.0, converged: true, evaluations: 0 });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut points = vec![lo];
    let mut inner: Vec<f64> =
        breakpoints.iter().copied().filter(|&x| x > lo && x < hi && x.is_finite()).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    points.extend(inner);
    points.push(hi);

    let mut st = State { f: &f, evals: 0, max_evals: opts.max_evals, error: 0.0, converged: true };
    let width = hi - lo;
    let mut total = 0.0;
    for w in points.windows(2) {
        let (u, v) = (w[0], w[1]);
        total += st.piece(u, v, opts.tol * (v - u) / width, opts.max_depth)?;
    }
    Ok(QuadResult {
        value: sign * total,
        error_estimate: st.error,
        converged: st.converged,
        evaluations: st.evals,
    })
}
