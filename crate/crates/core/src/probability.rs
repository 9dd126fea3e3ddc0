//! Level-shifted probabilities, normalization at mixed levels, hierarchical
//! product rules and trees of conditional probabilities.

use serde::{Deserialize, Serialize};

use crate::arithmetic::ArithmeticContext;
use crate::error::{check_probability, Error, Result};
use crate::generator::{Bijection, Generator};

/// A probability p together with the level k at which it is read, g^k(p).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelProb {
    pub p: f64,
    pub level: i32,
}

impl LevelProb {
    pub fn new(p: f64, level: i32) -> Result<Self> {
        check_probability("probability", p)?;
        Ok(LevelProb { p, level })
    }

    pub fn value<B: Bijection>(&self, bij: &B) -> Result<f64> {
        level_shift(bij, self.p, self.level)
    }
}

/// g^k(p), clamped into [0,1] after composition.
pub fn level_shift<B: Bijection>(bij: &B, p: f64, k: i32) -> Result<f64> {
    check_probability("probability", p)?;
    Ok(bij.eval_iterate(k, p)?.clamp(0.0, 1.0))
}

/// |g^k(p) (+)_l g^k(1-p) - 1|, measured in ordinary arithmetic.
pub fn normalization_residual<B: Bijection>(bij: &B, p: f64, k: i32, l: i32) -> Result<f64> {
    let s = normalization_sum(bij, p, k, l)?;
    Ok((s - 1.0).abs())
}

/// The same sum measured in the observer's arithmetic: |f^l(S) - 1|.
pub fn normalization_level_residual<B: Bijection>(bij: &B, p: f64, k: i32, l: i32) -> Result<f64> {
    let s = normalization_sum(bij, p, k, l)?;
    Ok(level_residual(bij, s, l))
}

fn normalization_sum<B: Bijection>(bij: &B, p: f64, k: i32, l: i32) -> Result<f64> {
    let ctx = ArithmeticContext::new(bij, l)?;
    let a = level_shift(bij, p, k)?;
    let b = level_shift(bij, 1.0 - p, k)?;
    Ok(ctx.add(a, b))
}

/// Distance of `value` from 1_l in the arithmetic of level l, |f^l(value) - 1|.
/// Level-l closeness is judged by pullbacks: |x (-)_l y| < g^l(eps) iff
/// |f^l x - f^l y| < eps.
pub fn level_residual<B: Bijection>(bij: &B, value: f64, l: i32) -> f64 {
    (bij.iterate(-l, value) - 1.0).abs()
}

/// Level-l product of the shifted factors g^{k_j}(p_j).
pub fn joint_product<B: Bijection>(bij: &B, conds: &[LevelProb], l: i32) -> Result<f64> {
    let ctx = ArithmeticContext::new(bij, l)?;
    if conds.len() == 1 {
        return conds[0].value(bij);
    }
    let vals = conds.iter().map(|c| c.value(bij)).collect::<Result<Vec<_>>>()?;
    Ok(ctx.product(vals))
}

fn default_node_level() -> i32 {
    1
}

/// One binary choice in a tree of conditional probabilities.
///
/// `p0` is the probability of outcome 0 given the path so far, `p1` defaults
/// to 1 - p0. `children` is empty at a leaf or holds the subtrees after
/// outcome 0 and outcome 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CondNode {
    #[serde(default = "default_node_level")]
    pub level: i32,
    pub p0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p1: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<CondNode>,
}

impl CondNode {
    pub fn leaf(level: i32, p0: f64) -> Self {
        CondNode { level, p0, p1: None, children: Vec::new() }
    }

    pub fn branch(level: i32, p0: f64, after0: CondNode, after1: CondNode) -> Self {
        CondNode { level, p0, p1: None, children: vec![after0, after1] }
    }

    fn probs(&self) -> [f64; 2] {
        [self.p0, self.p1.unwrap_or(1.0 - self.p0)]
    }

    fn validate(&self, depth: usize) -> Result<()> {
        let [p0, p1] = self.probs();
        for p in [p0, p1] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::MalformedTree(format!("probability {p} at depth {depth}")));
            }
        }
        if (p0 + p1 - 1.0).abs() > 1e-12 {
            return Err(Error::MalformedTree(format!(
                "branch probabilities {p0} + {p1} != 1 at depth {depth}"
            )));
        }
        match self.children.len() {
            0 => Ok(()),
            2 => self.children.iter().try_for_each(|c| c.validate(depth + 1)),
            n => Err(Error::MalformedTree(format!("{n} children at depth {depth}"))),
        }
    }
}

fn default_sum_level() -> i32 {
    0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CondTree {
    #[serde(default = "default_sum_level")]
    pub sum_level: i32,
    pub root: CondNode,
}

impl CondTree {
    pub fn new(root: CondNode, sum_level: i32) -> Result<Self> {
        let t = CondTree { sum_level, root };
        t.root.validate(0)?;
        Ok(t)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: CondTree =
            serde_json::from_str(text).map_err(|e| Error::MalformedTree(e.to_string()))?;
        t.root.validate(0)?;
        Ok(t)
    }

    /// Joint probability of the outcomes along `path` (false = 0, true = 1).
    pub fn joint<B: Bijection>(&self, bij: &B, path: &[bool]) -> Result<f64> {
        let mut node = &self.root;
        let mut factors = Vec::with_capacity(path.len());
        for (i, &bit) in path.iter().enumerate() {
            factors.push(LevelProb::new(node.probs()[usize::from(bit)], node.level)?);
            let last = i + 1 == path.len();
            match (node.children.is_empty(), last) {
                (true, true) | (false, false) => {}
                (true, false) => {
                    return Err(Error::InvalidInput(format!("path longer than the tree at step {i}")))
                }
                (false, true) => {
                    return Err(Error::InvalidInput("path ends above a leaf".into()));
                }
            }
            if !last {
                node = &node.children[usize::from(bit)];
            }
        }
        if factors.is_empty() {
            return Err(Error::InvalidInput("empty path".into()));
        }
        joint_product(bij, &factors, self.sum_level)
    }

    /// Every root-to-leaf path.
    pub fn leaves(&self) -> Vec<Vec<bool>> {
        fn walk(n: &CondNode, prefix: &mut Vec<bool>, out: &mut Vec<Vec<bool>>) {
            for bit in [false, true] {
                prefix.push(bit);
                if n.children.is_empty() {
                    out.push(prefix.clone());
                } else {
                    walk(&n.children[usize::from(bit)], prefix, out);
                }
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut Vec::new(), &mut out);
        out
    }

    /// Level sum over all leaves; 1 for a well-formed tree.
    pub fn normalization<B: Bijection>(&self, bij: &B) -> Result<f64> {
        let ctx = ArithmeticContext::new(bij, self.sum_level)?;
        let joints =
            self.leaves().iter().map(|p| self.joint(bij, p)).collect::<Result<Vec<_>>>()?;
        Ok(ctx.sum(joints))
    }
}

/// Joint outcome probabilities P(a, b) for two spin measurements at relative
/// angle theta. Rows are a, columns b.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingletTable {
    pub theta: f64,
    pub p: [[f64; 2]; 2],
}

impl SingletTable {
    pub fn total(&self) -> f64 {
        self.p.iter().flatten().sum()
    }

    pub fn row_marginals(&self) -> [f64; 2] {
        [self.p[0][0] + self.p[0][1], self.p[1][0] + self.p[1][1]]
    }

    pub fn column_marginals(&self) -> [f64; 2] {
        [self.p[0][0] + self.p[1][0], self.p[0][1] + self.p[1][1]]
    }
}

/// P(a,b) = g(p(a|b)) times g(p(b)) with level-0 multiplication, the hidden
/// conditionals being theta/pi (equal outcomes) and 1 - theta/pi.
pub fn singlet_table<B: Bijection>(bij: &B, theta: f64) -> Result<SingletTable> {
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(Error::Domain { what: "singlet angle", value: theta });
    }
    let same = theta / std::f64::consts::PI;
    let entry = |cond: f64| {
        joint_product(bij, &[LevelProb { p: 0.5, level: 1 }, LevelProb { p: cond, level: 1 }], 0)
    };
    let d = entry(same)?;
    let o = entry(1.0 - same)?;
    Ok(SingletTable { theta, p: [[d, o], [o, d]] })
}

/// Relation between the hidden angle alpha and the detector angle theta,
/// alpha = 2 asin sqrt((2/pi) asin sqrt(theta/pi)), computed as pi f(f(theta/pi)).
pub fn alpha_of_theta(theta: f64) -> Result<f64> {
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(Error::Domain { what: "alpha_of_theta angle", value: theta });
    }
    let g = Generator::sine();
    Ok(std::f64::consts::PI * g.inverse(g.inverse(theta / std::f64::consts::PI)))
}
