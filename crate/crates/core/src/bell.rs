//! The circle hidden-variable model behind singlet probabilities, and the
//! Clauser-Horne combination at levels 0 and 1.
//!
//! Hidden variables λ are uniform on the circle, ρ(λ) = 1/2π. Each outcome of
//! a measurement is the indicator of a closed half circle. Integrals of
//! products of indicators are computed exactly from arc endpoints.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2, TAU};

use rayon::prelude::*;
use serde::Serialize;

use crate::arithmetic::ArithmeticContext;
use crate::calculus::{nn_integral, LevelFunction};
use crate::error::{Error, Result};
use crate::generator::Bijection;
use crate::probability::SingletTable;

/// Reduces an angle to [0, 2π).
pub fn canonical_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Minimal arc distance between two angles, in [0, π].
pub fn arc_distance(a: f64, b: f64) -> f64 {
    let d = canonical_angle(a - b);
    d.min(TAU - d)
}

/// Indicator of the closed arc [φ - π/2, φ + π/2] on the circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfCircleChar {
    pub phi: f64,
}

impl HalfCircleChar {
    pub fn new(phi: f64) -> Self {
        HalfCircleChar { phi: canonical_angle(phi) }
    }

    fn start(&self) -> f64 {
        canonical_angle(self.phi - FRAC_PI_2)
    }

    /// The support as one or two intervals inside [0, 2π].
    pub fn intervals(&self) -> Vec<(f64, f64)> {
        let s = self.start();
        let e = s + PI;
        if e <= TAU {
            vec![(s, e)]
        } else {
            vec![(0.0, e - TAU), (s, TAU)]
        }
    }

    /// Arc endpoints inside [0, 2π), usable as quadrature breakpoints.
    pub fn endpoints(&self) -> [f64; 2] {
        let s = self.start();
        let e = s + PI;
        [s, if e < TAU { e } else { e - TAU }]
    }

    pub fn contains(&self, lambda: f64) -> bool {
        let x = canonical_angle(lambda);
        self.intervals().iter().any(|&(u, v)| u <= x && x <= v)
    }

    pub fn value(&self, lambda: f64) -> f64 {
        if self.contains(lambda) {
            1.0
        } else {
            0.0
        }
    }
}

fn intersect(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &(u, v) in a {
        for &(s, t) in b {
            let lo = u.max(s);
            let hi = v.min(t);
            if hi > lo {
                out.push((lo, hi));
            }
        }
    }
    out
}

/// Lebesgue measure of the intersection of the supports (2π for no arcs).
pub fn intersection_measure(chars: &[HalfCircleChar]) -> f64 {
    let mut acc = vec![(0.0, TAU)];
    for c in chars {
        acc = intersect(&acc, &c.intervals());
    }
    acc.iter().map(|(u, v)| v - u).sum()
}

/// ∫ χ_α χ_{β+π} ρ dλ, which is d(α, β)/2π with d the arc distance.
pub fn overlap_integral(alpha: f64, beta: f64) -> f64 {
    intersection_measure(&[HalfCircleChar::new(alpha), HalfCircleChar::new(beta + PI)]) / TAU
}

/// ∫ χ_{a1} χ_{a2} ρ dλ.
pub fn joint_hidden(a1: f64, a2: f64) -> f64 {
    intersection_measure(&[HalfCircleChar::new(a1), HalfCircleChar::new(a2)]) / TAU
}

/// The uniform density conditioned on a half circle, χρ / ∫χρ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionedDensity {
    support: HalfCircleChar,
    norm: f64,
}

impl ConditionedDensity {
    pub fn support(&self) -> HalfCircleChar {
        self.support
    }

    pub fn value(&self, lambda: f64) -> f64 {
        self.support.value(lambda) / TAU / self.norm
    }

    /// ∫ (product of chars) times the density.
    pub fn integrate(&self, chars: &[HalfCircleChar]) -> f64 {
        let mut all = vec![self.support];
        all.extend_from_slice(chars);
        intersection_measure(&all) / TAU / self.norm
    }
}

pub fn condition_density_level0(chi: HalfCircleChar) -> Result<ConditionedDensity> {
    let norm = intersection_measure(&[chi]) / TAU;
    if !(norm > 0.0) {
        return Err(Error::Domain { what: "conditioning measure", value: norm });
    }
    Ok(ConditionedDensity { support: chi, norm })
}

/// G(x) = g(2x)/2, a bijection of the reals when g is unit-periodic.
#[derive(Debug, Clone)]
pub struct GMap<B> {
    inner: B,
}

impl<B: Bijection> GMap<B> {
    pub fn new(inner: B) -> Self {
        GMap { inner }
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }
}

impl<B: Bijection> Bijection for GMap<B> {
    fn forward(&self, x: f64) -> f64 {
        0.5 * self.inner.forward(2.0 * x)
    }
    fn inverse(&self, y: f64) -> f64 {
        0.5 * self.inner.inverse(2.0 * y)
    }
    fn iterate_cap(&self) -> u32 {
        self.inner.iterate_cap()
    }
}

/// Outcome indicator of the first party: χ_{a + π·outcome}.
pub fn first_party_char(setting: f64, outcome: bool) -> HalfCircleChar {
    HalfCircleChar::new(setting + if outcome { PI } else { 0.0 })
}

/// Outcome indicator of the second party, anticorrelated: χ_{b + π + π·outcome}.
pub fn second_party_char(setting: f64, outcome: bool) -> HalfCircleChar {
    HalfCircleChar::new(setting + PI + if outcome { PI } else { 0.0 })
}

/// G(∫ χ_{a1} χ_{a2} ρ dλ) from the exact arc overlap.
pub fn singlet_from_hidden<B: Bijection>(bij: &B, a1: f64, a2: f64) -> f64 {
    GMap::new(bij).forward(joint_hidden(a1, a2))
}

/// The same probability as a non-Newtonian integral with the G bijection,
/// from level 0 to level 1, over one turn of the circle.
pub fn singlet_from_hidden_quadrature<B: Bijection>(bij: &B, a1: f64, a2: f64, tol: f64) -> Result<f64> {
    let (c1, c2) = (HalfCircleChar::new(a1), HalfCircleChar::new(a2));
    let mut bp = c1.endpoints().to_vec();
    bp.extend(c2.endpoints());
    let func = LevelFunction::new(move |l: f64| c1.value(l) * c2.value(l) / TAU, 0, 1).with_breakpoints(bp);
    nn_integral(&GMap::new(bij), &func, 0.0, TAU, tol)
}

/// All four outcome probabilities for settings a and b, from the hidden model.
pub fn singlet_table_from_hidden<B: Bijection>(bij: &B, a: f64, b: f64) -> SingletTable {
    let gmap = GMap::new(bij);
    let mut p = [[0.0; 2]; 2];
    for (i, row) in p.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let m = intersection_measure(&[first_party_char(a, i == 1), second_party_char(b, j == 1)]);
            *cell = gmap.forward(m / TAU);
        }
    }
    SingletTable { theta: arc_distance(a, b), p }
}

/// Σ G(x_ab) for four joint probabilities with unit sum and marginals ½.
pub fn lemma4_sum<B: Bijection>(bij: &B, x: [[f64; 2]; 2]) -> Result<f64> {
    let total: f64 = x.iter().flatten().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidWeights { sum: total });
    }
    let margins = [x[0][0] + x[0][1], x[1][0] + x[1][1], x[0][0] + x[1][0], x[0][1] + x[1][1]];
    if let Some(m) = margins.iter().find(|m| (**m - 0.5).abs() > 1e-12) {
        return Err(Error::Domain { what: "marginal of a rotationally symmetric table", value: *m });
    }
    let gmap = GMap::new(bij);
    Ok(x.iter().flatten().map(|&v| gmap.forward(v)).sum())
}

/// Hidden conditional p(a2|a1) = 1 - d/π.
pub fn hidden_conditional(a1: f64, a2: f64) -> f64 {
    1.0 - arc_distance(a1, a2) / PI
}

/// Level-1 conditional g(p(a2|a1)); cos²(d/2) for the sine generator.
pub fn conditional_level1<B: Bijection>(bij: &B, a1: f64, a2: f64) -> f64 {
    bij.forward(hidden_conditional(a1, a2))
}

/// g(p(a2|a1)) obtained by projecting the level-1 density onto χ_{a1,11}
/// and integrating χ_{a2,11} against the reduced density, all in the
/// arithmetic of level 1.
pub fn conditional_level1_projection<B: Bijection>(bij: &B, a1: f64, a2: f64, tol: f64) -> Result<f64> {
    let ctx = ArithmeticContext::new(bij, 1)?;
    let (c1, c2) = (HalfCircleChar::new(a1), HalfCircleChar::new(a2));
    let mut bp = c1.endpoints().to_vec();
    bp.extend(c2.endpoints());
    let rho11 = ctx.push(1.0 / TAU);
    // g maps 0 and 1 to themselves, so χ_11 read at g(r) is χ(r)
    let weighted = LevelFunction::new(|r: f64| ctx.pull(ctx.mul(c1.value(r), rho11)), 1, 1)
        .with_breakpoints(bp.clone());
    let (lo, hi) = (ctx.push(0.0), ctx.push(TAU));
    let z = nn_integral(bij, &weighted, lo, hi, tol)?;
    if ctx.pull(z) == 0.0 {
        return Err(Error::DivisionByZero { pullback: 0.0 });
    }
    let density = |r: f64| ctx.div(ctx.mul(c1.value(r), rho11), z).unwrap_or(f64::NAN);
    let integrand = LevelFunction::new(|r: f64| ctx.pull(ctx.mul(c2.value(r), density(r))), 1, 1)
        .with_breakpoints(bp);
    nn_integral(bij, &integrand, lo, hi, tol)
}

/// Detector settings a, a' of the first party and b, b' of the second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AngleQuad {
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub b_prime: f64,
}

impl AngleQuad {
    pub fn new(a: f64, a_prime: f64, b: f64, b_prime: f64) -> Self {
        AngleQuad { a, a_prime, b, b_prime }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.a, self.a_prime, self.b, self.b_prime]
    }

    fn pullbacks(&self) -> [f64; 4] {
        [
            hidden_conditional(self.b, self.a),
            hidden_conditional(self.b_prime, self.a),
            hidden_conditional(self.b, self.a_prime),
            hidden_conditional(self.b_prime, self.a_prime),
        ]
    }
}

/// g(p(a|b)) ⊖ g(p(a|b')) ⊕ g(p(a'|b)) ⊕ g(p(a'|b')) in level-1 arithmetic.
/// `bij` must be defined on the whole real line.
pub fn ch_value_level1<B: Bijection>(bij: &B, q: &AngleQuad) -> Result<f64> {
    let ctx = ArithmeticContext::new(bij, 1)?;
    let [c1, c2, c3, c4] = q.pullbacks().map(|p| bij.forward(p));
    Ok(ctx.add(ctx.add(ctx.sub(c1, c2), c3), c4))
}

/// The same combination of conditionals with ordinary + and -.
pub fn ch_value_level0<B: Bijection>(bij: &B, q: &AngleQuad) -> f64 {
    let [c1, c2, c3, c4] = q.pullbacks().map(|p| bij.forward(p));
    c1 - c2 + c3 + c4
}

#[derive(Debug, Clone, Serialize)]
pub struct ChScanReport {
    pub resolution: f64,
    pub grid_points: usize,
    pub max0: f64,
    pub argmax0: [f64; 4],
    /// max0 after local refinement off the grid.
    pub max0_refined: f64,
    pub argmax0_refined: [f64; 4],
    pub min0: f64,
    pub argmin0: [f64; 4],
    pub max1: f64,
    pub argmax1: [f64; 4],
    /// max0 stays at or below 1 + √2 and max1 at or below 2, within 1e-9.
    pub tsirelson_check: bool,
}

#[derive(Debug, Clone, Copy)]
struct Best {
    value: f64,
    index: usize,
}

impl Best {
    fn start() -> Self {
        Best { value: f64::NEG_INFINITY, index: usize::MAX }
    }

    fn offer(&mut self, value: f64, index: usize) {
        if value > self.value || (value == self.value && index < self.index) {
            *self = Best { value, index };
        }
    }

    fn merge(mut self, other: Best) -> Best {
        self.offer(other.value, other.index);
        self
    }
}

/// Scans quads with a = 0 and the other three settings on a uniform grid of
/// step close to `resolution`. Rotating all four settings together leaves both
/// CH values unchanged, so fixing a loses nothing.
///
/// g_R is increasing, so the level-1 maximum is g_R of the largest pullback sum.
pub fn ch_scan<B: Bijection>(bij: &B, resolution: f64) -> Result<ChScanReport> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(Error::Domain { what: "scan resolution", value: resolution });
    }
    let n = ((TAU / resolution) - 1e-9).ceil().max(1.0) as usize;
    let step = TAU / n as f64;
    let pull: Vec<f64> = (0..n).map(|i| 1.0 - (i.min(n - i) as f64 * step) / PI).collect();
    let cond: Vec<f64> = pull.iter().map(|&p| bij.forward(p)).collect();

    let (hi0, lo0, hi1) = (0..n)
        .into_par_iter()
        .map(|ib| {
            let (mut hi0, mut lo0, mut hi1) = (Best::start(), Best::start(), Best::start());
            for iap in 0..n {
                let x = (iap + n - ib) % n;
                for ibp in 0..n {
                    let y = (iap + n - ibp) % n;
                    let idx = (ib * n + iap) * n + ibp;
                    let v0 = cond[ib] - cond[ibp] + cond[x] + cond[y];
                    let v1 = pull[ib] - pull[ibp] + pull[x] + pull[y];
                    hi0.offer(v0, idx);
                    lo0.offer(-v0, idx);
                    hi1.offer(v1, idx);
                }
            }
            (hi0, lo0, hi1)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((Best::start(), Best::start(), Best::start()), |acc, x| {
            (acc.0.merge(x.0), acc.1.merge(x.1), acc.2.merge(x.2))
        });

    let quad = |idx: usize| {
        let ibp = idx % n;
        let iap = (idx / n) % n;
        let ib = idx / (n * n);
        AngleQuad::new(0.0, iap as f64 * step, ib as f64 * step, ibp as f64 * step)
    };
    let (q0, qmin, q1) = (quad(hi0.index), quad(lo0.index), quad(hi1.index));
    let max0 = ch_value_level0(bij, &q0);
    let max1 = ch_value_level1(bij, &q1)?;

    let objective = |v: &[f64; 3]| ch_value_level0(bij, &AngleQuad::new(0.0, v[0], v[1], v[2]));
    let (best, refined) = nelder_mead_max(objective, [q0.a_prime, q0.b, q0.b_prime], 0.5 * step, 1e-14, 5000);
    let (max0_refined, arg_refined) = if refined >= max0 {
        (refined, AngleQuad::new(0.0, best[0], best[1], best[2]))
    } else {
        (max0, q0)
    };

    Ok(ChScanReport {
        resolution,
        grid_points: n,
        max0,
        argmax0: q0.to_array(),
        max0_refined,
        argmax0_refined: arg_refined.to_array(),
        min0: ch_value_level0(bij, &qmin),
        argmin0: qmin.to_array(),
        max1,
        argmax1: q1.to_array(),
        tsirelson_check: max0_refined <= 1.0 + SQRT_2 + 1e-9 && max1 <= 2.0 + 1e-9,
    })
}

/// Nelder-Mead maximization in three variables.
fn nelder_mead_max<F: Fn(&[f64; 3]) -> f64>(
    f: F,
    x0: [f64; 3],
    scale: f64,
    tol: f64,
    max_iter: usize,
) -> ([f64; 3], f64) {
    let mut simplex: Vec<([f64; 3], f64)> = (0..4)
        .map(|i| {
            let mut x = x0;
            if i > 0 {
                x[i - 1] += scale;
            }
            (x, f(&x))
        })
        .collect();
    let along = |a: &[f64; 3], b: &[f64; 3], t: f64| -> [f64; 3] {
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])]
    };
    for _ in 0..max_iter {
        simplex.sort_by(|p, q| q.1.total_cmp(&p.1));
        if simplex[0].1 - simplex[3].1 <= tol {
            break;
        }
        let mut c = [0.0; 3];
        for (x, _) in &simplex[..3] {
            for d in 0..3 {
                c[d] += x[d] / 3.0;
            }
        }
        let worst = simplex[3];
        let r = along(&c, &worst.0, -1.0);
        let fr = f(&r);
        if fr > simplex[0].1 {
            let e = along(&c, &worst.0, -2.0);
            let fe = f(&e);
            simplex[3] = if fe > fr { (e, fe) } else { (r, fr) };
        } else if fr > simplex[2].1 {
            simplex[3] = (r, fr);
        } else {
            let k = along(&c, &worst.0, 0.5);
            let fk = f(&k);
            if fk > worst.1 {
                simplex[3] = (k, fk);
            } else {
                let top = simplex[0].0;
                for s in simplex.iter_mut().skip(1) {
                    let x = along(&top, &s.0, 0.5);
                    *s = (x, f(&x));
                }
            }
        }
    }
    simplex.sort_by(|p, q| q.1.total_cmp(&p.1));
    simplex[0]
}
