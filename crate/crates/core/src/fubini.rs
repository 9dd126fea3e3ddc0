//! Fubini-Study geodesic distance as a hidden variable, the ladder of
//! probabilities it generates, and the quadratic form of a projector read in
//! the arithmetic of level 1.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arithmetic::ArithmeticContext;
use crate::error::{Error, Result};
use crate::generator::Bijection;

/// A finite-dimensional state vector, not necessarily normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    components: Vec<Complex64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonEntry {
    Real(f64),
    Complex([f64; 2]),
}

impl StateVector {
    pub fn new(components: Vec<Complex64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidInput("state vector has no components".into()));
        }
        if let Some(c) = components.iter().find(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::Domain { what: "state vector component", value: if c.re.is_finite() { c.im } else { c.re } });
        }
        Ok(StateVector { components })
    }

    pub fn from_real(components: &[f64]) -> Result<Self> {
        Self::new(components.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// A JSON array whose entries are numbers or [re, im] pairs.
    pub fn from_json(text: &str) -> Result<Self> {
        let entries: Vec<JsonEntry> =
            serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("state vector JSON: {e}")))?;
        Self::new(
            entries
                .into_iter()
                .map(|e| match e {
                    JsonEntry::Real(x) => Complex64::new(x, 0.0),
                    JsonEntry::Complex([re, im]) => Complex64::new(re, im),
                })
                .collect(),
        )
    }

    pub fn components(&self) -> &[Complex64] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// ⟨self|other⟩, antilinear in the first argument.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        self.check_dim(other.dim())?;
        Ok(self.components.iter().zip(&other.components).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn norm(&self) -> f64 {
        self.components.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Result<StateVector> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::InvalidInput("zero state vector".into()));
        }
        Ok(StateVector { components: self.components.iter().map(|c| c / n).collect() })
    }

    pub fn scaled(&self, factor: Complex64) -> StateVector {
        StateVector { components: self.components.iter().map(|c| c * factor).collect() }
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() == dim {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("dimension mismatch: {} vs {dim}", self.dim())))
        }
    }
}

/// θ(a,b) = arccos(|⟨a|b⟩| / (‖a‖‖b‖)), in [0, π/2].
pub fn geodesic_distance(a: &StateVector, b: &StateVector) -> Result<f64> {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::InvalidInput("geodesic distance to a zero vector".into()));
    }
    let c = a.inner(b)?.norm() / (na * nb);
    Ok(c.clamp(0.0, 1.0).acos())
}

/// p(b|a) = 1 - θ/(π/2).
pub fn hidden_prob(theta: f64) -> Result<f64> {
    if !(0.0..=FRAC_PI_2).contains(&theta) {
        return Err(Error::Domain { what: "geodesic distance (must be in [0, pi/2])", value: theta });
    }
    Ok(1.0 - theta / FRAC_PI_2)
}

/// g^j(p) for j = k_from..=k_to, with p = hidden_prob(arccos √P) the hidden
/// probability behind the quantum probability P.
pub fn ladder<B: Bijection>(bij: &B, big_p: f64, k_from: i32, k_to: i32) -> Result<Vec<(i32, f64)>> {
    if !(0.0..=1.0).contains(&big_p) {
        return Err(Error::Domain { what: "quantum probability", value: big_p });
    }
    if k_from > k_to {
        return Err(Error::InvalidInput(format!("empty level range {k_from}..={k_to}")));
    }
    bij.check_level(i64::from(k_from))?;
    bij.check_level(i64::from(k_to))?;
    let p = hidden_prob(big_p.sqrt().acos())?;
    let mut v = bij.iterate(k_from, p);
    let mut out = vec![(k_from, v)];
    for j in k_from + 1..=k_to {
        v = if j <= 0 { bij.iterate(j, p) } else { bij.forward(v) };
        out.push((j, v));
    }
    Ok(out)
}

/// xᵀAx + yᵀBy + xᵀCy for a state split into real part x and imaginary part y.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealQuadraticForm {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
}

impl RealQuadraticForm {
    pub fn new(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, c: Vec<Vec<f64>>) -> Result<Self> {
        let n = a.len();
        let square = |m: &Vec<Vec<f64>>| m.len() == n && m.iter().all(|r| r.len() == n);
        if n == 0 || !(square(&a) && square(&b) && square(&c)) {
            return Err(Error::InvalidInput("quadratic form needs three square matrices of equal size".into()));
        }
        Ok(RealQuadraticForm { a, b, c })
    }

    /// ⟨a|P_b|a⟩ for P_b = |b⟩⟨b| / ⟨b|b⟩. With P_b = R + iI this is
    /// A = R, B = R, C = -2I.
    pub fn from_projector(b: &StateVector) -> Result<Self> {
        let b = b.normalized()?;
        let n = b.dim();
        let cs = b.components();
        let entry = |r: usize, s: usize| cs[r] * cs[s].conj();
        let re: Vec<Vec<f64>> = (0..n).map(|r| (0..n).map(|s| entry(r, s).re).collect()).collect();
        let im: Vec<Vec<f64>> = (0..n).map(|r| (0..n).map(|s| -2.0 * entry(r, s).im).collect()).collect();
        Self::new(re.clone(), re, im)
    }

    pub fn identity(n: usize) -> Result<Self> {
        let eye: Vec<Vec<f64>> = (0..n).map(|r| (0..n).map(|s| f64::from(u8::from(r == s))).collect()).collect();
        Self::new(eye.clone(), eye, vec![vec![0.0; n]; n])
    }

    pub fn zero(n: usize) -> Result<Self> {
        let z = vec![vec![0.0; n]; n];
        Self::new(z.clone(), z.clone(), z)
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    fn terms<'a>(&'a self, x: &'a [f64], y: &'a [f64]) -> impl Iterator<Item = (f64, f64, f64)> + 'a {
        let n = self.dim();
        let block = move |m: &'a Vec<Vec<f64>>, u: &'a [f64], v: &'a [f64]| {
            (0..n).flat_map(move |r| (0..n).map(move |s| (u[r], m[r][s], v[s])))
        };
        block(&self.a, x, x).chain(block(&self.b, y, y)).chain(block(&self.c, x, y))
    }

    pub fn evaluate(&self, state: &StateVector) -> Result<f64> {
        state.check_dim(self.dim())?;
        let (x, y) = split(state);
        Ok(self.terms(&x, &y).map(|(u, m, v)| u * m * v).sum())
    }
}

fn split(state: &StateVector) -> (Vec<f64>, Vec<f64>) {
    state.components().iter().map(|c| (c.re, c.im)).unzip()
}

/// The form with every coefficient and component mapped through g and all
/// sums and products taken at level 1: ⊕ g(x_r) ⊙ g(A_rs) ⊙ g(x_s) ⊕ ...
/// `bij` must be defined on the whole real line, since components and
/// coefficients are signed.
pub fn lifted_form_value<B: Bijection>(bij: &B, form: &RealQuadraticForm, state: &StateVector) -> Result<f64> {
    state.check_dim(form.dim())?;
    let ctx = ArithmeticContext::new(bij, 1)?;
    let (x, y) = split(state);
    let terms: Vec<f64> = form
        .terms(&x, &y)
        .map(|(u, m, v)| ctx.product([bij.forward(u), bij.forward(m), bij.forward(v)]))
        .collect();
    let value = ctx.sum(terms);
    if !value.is_finite() {
        return Err(Error::NumericDomain { at: ctx.pull(value), value });
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::ExtendedGenerator;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};

    fn sine() -> ExtendedGenerator {
        ExtendedGenerator::sine()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn distances() {
        let a = StateVector::from_real(&[1.0, 0.0]).unwrap();
        let b = StateVector::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        let o = StateVector::from_real(&[0.0, 3.0]).unwrap();
        assert_eq!(geodesic_distance(&a, &a).unwrap(), 0.0);
        assert!((geodesic_distance(&a, &o).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!((geodesic_distance(&a, &b).unwrap() - FRAC_PI_4).abs() < 1e-15);
        let z = StateVector::from_real(&[0.0, 0.0]).unwrap();
        assert!(geodesic_distance(&a, &z).is_err());
        assert!(StateVector::new(vec![]).is_err());
    }

    #[test]
    fn hidden() {
        let g = sine();
        assert_eq!(hidden_prob(0.0).unwrap(), 1.0);
        assert_eq!(hidden_prob(FRAC_PI_4).unwrap(), 0.5);
        assert_eq!(hidden_prob(FRAC_PI_2).unwrap(), 0.0);
        assert!(hidden_prob(2.0).is_err());
        for i in 0..=100 {
            let t = i as f64 * FRAC_PI_2 / 100.0;
            assert!((g.forward(hidden_prob(t).unwrap()) - t.cos().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn ladders() {
        let g = sine();
        for (_, v) in ladder(&g, 0.5, -3, 3).unwrap() {
            assert!((v - 0.5).abs() < 1e-15);
        }
        for (_, v) in ladder(&g, 1.0, -3, 3).unwrap() {
            assert_eq!(v, 1.0);
        }
        let big_p = (PI / 8.0).cos().powi(2);
        let l = ladder(&g, big_p, -1, 2).unwrap();
        assert!((l[0].1 - 2.0 / 3.0).abs() < 1e-15);
        assert!((l[1].1 - 0.75).abs() < 1e-15);
        assert!((l[2].1 - big_p).abs() < 1e-10);
        assert!(ladder(&g, 1.5, 0, 1).is_err());
        assert!(ladder(&g, 0.5, 2, 1).is_err());
    }

    #[test]
    fn json_states() {
        let s = StateVector::from_json("[1, [0.5, -2], 0.25]").unwrap();
        assert_eq!(s.components(), &[c(1.0, 0.0), c(0.5, -2.0), c(0.25, 0.0)]);
        assert!(StateVector::from_json("[\"x\"]").is_err());
        assert!(StateVector::from_json("[]").is_err());
    }

    #[test]
    fn forms() {
        let g = sine();
        let a = StateVector::new(vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let one = RealQuadraticForm::identity(2).unwrap();
        assert!((one.evaluate(&a).unwrap() - 1.0).abs() < 1e-15);
        assert!((lifted_form_value(&g, &one, &a).unwrap() - 1.0).abs() < 1e-12);
        let zero = RealQuadraticForm::zero(2).unwrap();
        assert_eq!(lifted_form_value(&g, &zero, &a).unwrap(), 0.0);
        assert!(RealQuadraticForm::new(vec![vec![1.0]], vec![], vec![]).is_err());
        let wrong = StateVector::from_real(&[1.0, 0.0, 0.0]).unwrap();
        assert!(one.evaluate(&wrong).is_err());
    }

    fn arb_state(n: usize) -> impl Strategy<Value = StateVector> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n).prop_filter_map("zero", |v| {
            StateVector::new(v.into_iter().map(|(r, i)| c(r, i)).collect()).ok()?.normalized().ok()
        })
    }

    proptest! {
        #[test]
        fn projector_form(a in arb_state(3), b in arb_state(3)) {
            let form = RealQuadraticForm::from_projector(&b).unwrap();
            let direct = a.inner(&b).unwrap().norm_sqr();
            let v = form.evaluate(&a).unwrap();
            prop_assert!((v - direct).abs() < 1e-12);
            let g = sine();
            let lifted = lifted_form_value(&g, &form, &a).unwrap();
            prop_assert!((lifted - g.forward(v)).abs() < 1e-8);
            let theta = geodesic_distance(&a, &b).unwrap();
            prop_assert!((g.forward(hidden_prob(theta).unwrap()) - direct).abs() < 1e-10);
        }

        #[test]
        fn phase_invariance(a in arb_state(3), b in arb_state(3), phase in 0.0f64..6.3) {
            let g = sine();
            let form = RealQuadraticForm::from_projector(&b).unwrap();
            let rotated = a.scaled(Complex64::from_polar(1.0, phase));
            let (u, v) = (lifted_form_value(&g, &form, &a).unwrap(), lifted_form_value(&g, &form, &rotated).unwrap());
            prop_assert!((u - v).abs() < 1e-8);
        }

        #[test]
        fn ladder_steps(big_p in 0.0f64..=1.0) {
            let g = sine();
            let l = ladder(&g, big_p, -4, 4).unwrap();
            for w in l.windows(2) {
                prop_assert!((g.forward(w[0].1) - w[1].1).abs() < 1e-12);
            }
            prop_assert!((l[5].1 - big_p).abs() < 1e-10);
        }
    }
}
