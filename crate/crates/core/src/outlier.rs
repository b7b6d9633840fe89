//! Soft outlier removal: weights `q: T -> [0, 1]` that keep most of the mass
//! while bounding the reweighted second moment along every direction in the
//! search ball.
//!
//! Feasibility is found with a cutting-plane loop. A separation oracle looks
//! for `w` in the ball with a large weighted second moment; each such `w`
//! becomes a linear cut with nonnegative coefficients `(w . x)^2`, enforced by
//! lowering the weights of the largest contributors first.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, InfeasibleReason, Result};
use crate::geometry::project_to_ball_pair;
use crate::linalg::{dot, norm, SymMatrix};
use crate::rng::{stream, StreamTag};
use crate::spectral::power_iteration;
use crate::types::{Provenance, SearchBall, GEOM_TOL};

pub const DEFAULT_SLACK: f64 = 1.1;
pub const DEFAULT_RESTARTS: usize = 4;
pub const ASCENT_STEPS: usize = 200;
/// Cuts are enforced to this fraction of the bound.
const CUT_MARGIN: f64 = 0.95;

pub fn default_max_cuts(dim: usize) -> usize {
    50 * dim
}

/// Weights over the instances of a removal problem.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMap {
    q: Vec<f64>,
}

impl WeightMap {
    pub fn ones(n: usize) -> Self {
        WeightMap { q: vec![1.0; n] }
    }

    pub fn from_vec(q: Vec<f64>) -> Result<Self> {
        if q.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("weights", "every weight must lie in [0, 1]"));
        }
        Ok(WeightMap { q })
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.q
    }

    pub fn total(&self) -> f64 {
        self.q.iter().sum()
    }

    /// `p = q / sum(q)`.
    pub fn normalized(&self) -> Result<Vec<f64>> {
        let t = self.total();
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::invalid("weights", "total weight is zero"));
        }
        Ok(self.q.iter().map(|v| v / t).collect())
    }
}

#[derive(Clone, Debug)]
pub struct RemovalProblem {
    instances: Vec<Vec<f64>>,
    ball: SearchBall,
    b: f64,
    xi: f64,
    c_bound: f64,
    slack: f64,
}

impl RemovalProblem {
    /// `ball` is `W` (center `u`, radius `r`). Instances must lie in the band
    /// `|u . x| <= b`; a zero center places no band restriction.
    pub fn new(instances: Vec<Vec<f64>>, ball: SearchBall, b: f64, xi: f64, c_bound: f64) -> Result<Self> {
        if instances.is_empty() {
            return Err(Error::invalid("instances", "need at least one instance"));
        }
        let d = ball.dim();
        if let Some(bad) = instances.iter().find(|x| x.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: bad.len(),
            });
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::invalid("b", format!("{b} must be positive")));
        }
        if !(0.0..0.5).contains(&xi) {
            return Err(Error::invalid("xi", format!("{xi} is outside [0, 1/2)")));
        }
        if !(c_bound.is_finite() && c_bound > 0.0) {
            return Err(Error::invalid("c", format!("{c_bound} must be positive")));
        }
        let u = ball.center();
        if norm(u) > 0.0 {
            if let Some(i) = instances.iter().position(|x| dot(u, x).abs() > b * (1.0 + GEOM_TOL)) {
                return Err(Error::invalid(
                    "instances",
                    format!("instance {i} lies outside the band"),
                ));
            }
        }
        Ok(RemovalProblem {
            instances,
            ball,
            b,
            xi,
            c_bound,
            slack: DEFAULT_SLACK,
        })
    }

    pub fn with_slack(mut self, slack: f64) -> Result<Self> {
        if !(slack.is_finite() && slack >= 1.0) {
            return Err(Error::invalid("slack", format!("{slack} must be at least 1")));
        }
        self.slack = slack;
        Ok(self)
    }

    pub fn instances(&self) -> &[Vec<f64>] {
        &self.instances
    }

    pub fn ball(&self) -> &SearchBall {
        &self.ball
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn c_bound(&self) -> f64 {
        self.c_bound
    }

    pub fn slack(&self) -> f64 {
        self.slack
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.ball.dim()
    }

    /// `c (b^2 + r^2)`
    pub fn bound(&self) -> f64 {
        self.c_bound * (self.b * self.b + self.ball.radius() * self.ball.radius())
    }

    /// The oracle threshold `slack * c (b^2 + r^2)`.
    pub fn threshold(&self) -> f64 {
        self.slack * self.bound()
    }

    /// `(1 - xi) |T|`
    pub fn required_mass(&self) -> f64 {
        (1.0 - self.xi) * self.len() as f64
    }

    /// `(1/|T|) sum q(x) (w . x)^2`
    pub fn objective(&self, q: &WeightMap, w: &[f64]) -> f64 {
        let s: f64 = self
            .instances
            .iter()
            .zip(q.as_slice())
            .map(|(x, qi)| {
                let t = dot(w, x);
                qi * t * t
            })
            .sum();
        s / self.len() as f64
    }

    fn second_moment(&self, q: &WeightMap) -> SymMatrix {
        SymMatrix::weighted_second_moment(&self.instances, Some(q.as_slice()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Separation {
    pub w: Vec<f64>,
    pub value: f64,
}

/// Approximate maximizer of the weighted second moment over `W`.
pub fn separation_oracle(q: &WeightMap, problem: &RemovalProblem, restarts: usize, seed: u64) -> Result<Separation> {
    separation_oracle_warm(q, problem, restarts, seed, &[])
}

/// As [`separation_oracle`], with extra ascent starts in `warm`.
pub fn separation_oracle_warm(
    q: &WeightMap,
    problem: &RemovalProblem,
    restarts: usize,
    seed: u64,
    warm: &[Vec<f64>],
) -> Result<Separation> {
    if restarts == 0 {
        return Err(Error::invalid("restarts", "must be at least 1"));
    }
    if q.len() != problem.len() {
        return Err(Error::DimensionMismatch {
            expected: problem.len(),
            found: q.len(),
        });
    }
    let d = problem.dim();
    let ball = problem.ball();
    let u = ball.center();
    let r = ball.radius();
    let m = problem.second_moment(q);

    let mut rng = stream(seed, StreamTag::Removal, 0);
    let start: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let top = power_iteration(&m, &start);
    let lambda = top.value.max(0.0);

    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(restarts + 2 + warm.len());
    for s in [1.0, -1.0] {
        let p: Vec<f64> = u.iter().zip(&top.vector).map(|(ui, vi)| ui + s * r * vi).collect();
        starts.push(project_to_ball_pair(&p, ball)?);
    }
    for _ in 1..restarts {
        let g: Vec<f64> = (0..d).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
        let gn = norm(&g).max(f64::MIN_POSITIVE);
        let p: Vec<f64> = u.iter().zip(&g).map(|(ui, gi)| ui + r * gi / gn).collect();
        starts.push(project_to_ball_pair(&p, ball)?);
    }
    for w in warm {
        starts.push(project_to_ball_pair(w, ball)?);
    }

    let mut best = Separation {
        w: project_to_ball_pair(u, ball)?,
        value: 0.0,
    };
    best.value = m.quad_form(&best.w);
    if lambda == 0.0 {
        return Ok(best);
    }
    let step = 1.0 / (2.0 * lambda);
    let mut grad = vec![0.0; d];
    for mut w in starts {
        let mut value = m.quad_form(&w);
        for _ in 0..ASCENT_STEPS {
            m.mul_vec_into(&w, &mut grad);
            // ascent step along 2 M w
            let p: Vec<f64> = w.iter().zip(&grad).map(|(wi, gi)| wi + 2.0 * step * gi).collect();
            let next = project_to_ball_pair(&p, ball)?;
            let moved = crate::linalg::distance(&next, &w);
            w = next;
            value = m.quad_form(&w);
            if moved <= 1e-12 {
                break;
            }
        }
        if value > best.value {
            best = Separation { w, value };
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RemovalResult {
    pub q: WeightMap,
    pub cuts_used: usize,
    /// Largest objective value the oracle found at the accepted weights.
    pub certified_bound: f64,
}

impl RemovalResult {
    pub fn mass_fraction(&self) -> f64 {
        self.q.total() / self.q.len() as f64
    }

    /// `index,weight[,provenance]` rows.
    pub fn to_csv(&self, provenance: Option<&[Provenance]>) -> String {
        let mut out = String::new();
        match provenance {
            Some(_) => out.push_str("index,weight,provenance\n"),
            None => out.push_str("index,weight\n"),
        }
        for (i, w) in self.q.as_slice().iter().enumerate() {
            match provenance {
                Some(p) => {
                    let _ = writeln!(out, "{i},{w:.12},{}", provenance_token(p[i]));
                }
                None => {
                    let _ = writeln!(out, "{i},{w:.12}");
                }
            }
        }
        out
    }
}

pub fn provenance_token(p: Provenance) -> &'static str {
    match p {
        Provenance::Clean => "clean",
        Provenance::Dirty => "dirty",
        Provenance::Replacement => "replacement",
    }
}

/// Lowers weights in descending coefficient order until
/// `sum q_i a_i <= target`.
fn enforce_cut(q: &mut [f64], a: &[f64], target: f64) {
    let mut s: f64 = q.iter().zip(a).map(|(qi, ai)| qi * ai).sum();
    if s <= target {
        return;
    }
    let mut order: Vec<usize> = (0..a.len()).filter(|&i| a[i] > 0.0 && q[i] > 0.0).collect();
    order.sort_by(|&i, &j| a[j].total_cmp(&a[i]).then(i.cmp(&j)));
    for i in order {
        let excess = s - target;
        if excess <= 0.0 {
            break;
        }
        let cut = q[i].min(excess / a[i]);
        q[i] -= cut;
        if q[i] < 1e-15 {
            q[i] = 0.0;
        }
        s -= cut * a[i];
    }
}

pub fn soft_outlier_removal(
    problem: &RemovalProblem,
    max_cuts: usize,
    restarts: usize,
    seed: u64,
) -> Result<RemovalResult> {
    let n = problem.len();
    let mut q = WeightMap::ones(n);
    let mut warm: Vec<Vec<f64>> = Vec::new();
    let target = CUT_MARGIN * problem.bound() * n as f64;
    let required = problem.required_mass();
    let mut cuts = 0usize;
    loop {
        let sep = separation_oracle_warm(&q, problem, restarts, seed.wrapping_add(cuts as u64), &warm)?;
        if sep.value <= problem.threshold() {
            return Ok(RemovalResult {
                q,
                cuts_used: cuts,
                certified_bound: sep.value,
            });
        }
        if cuts >= max_cuts {
            return Err(Error::Infeasible(InfeasibleReason::CutLimit { cuts }));
        }
        cuts += 1;
        let a: Vec<f64> = problem
            .instances()
            .iter()
            .map(|x| {
                let t = dot(&sep.w, x);
                t * t
            })
            .collect();
        enforce_cut(&mut q.q, &a, target);
        let mass = q.total();
        if mass < required {
            return Err(Error::Infeasible(InfeasibleReason::MassExhausted { mass, required }));
        }
        warm.push(sep.w);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verification {
    pub ok: bool,
    /// Largest objective value found on the grid.
    pub value: f64,
    pub argmax: Vec<f64>,
    /// Present when the constraint is violated.
    pub witness: Option<Vec<f64>>,
}

/// Grid check of the second-moment constraint for two-dimensional problems.
///
/// The objective is convex, so its maximum over `W` sits on the boundary of
/// `W`, which is made of arcs of the two circles. Both circles are walked at
/// arc spacing `resolution`, together with their intersection points.
pub fn verify_weights(q: &WeightMap, problem: &RemovalProblem, resolution: f64) -> Result<Verification> {
    if problem.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: problem.dim(),
        });
    }
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(Error::invalid("resolution", "must be positive"));
    }
    let ball = problem.ball();
    let c = ball.center();
    let r = ball.radius();
    let feasible = |w: &[f64]| norm(w) <= 1.0 + 1e-12 && crate::linalg::distance(w, c) <= r + 1e-12;

    let mut candidates: Vec<Vec<f64>> = Vec::new();
    for (center, radius) in [([0.0, 0.0], 1.0), ([c[0], c[1]], r)] {
        let steps = ((std::f64::consts::TAU * radius / resolution).ceil() as usize).max(8);
        for i in 0..steps {
            let t = std::f64::consts::TAU * i as f64 / steps as f64;
            candidates.push(vec![center[0] + radius * t.cos(), center[1] + radius * t.sin()]);
        }
    }
    let cn = norm(c);
    if cn > 0.0 {
        let alpha = (1.0 + cn * cn - r * r) / (2.0 * cn * cn);
        let h2 = 1.0 - alpha * alpha * cn * cn;
        if h2 >= 0.0 {
            let h = h2.sqrt() / cn;
            let perp = [-c[1], c[0]];
            for s in [1.0, -1.0] {
                candidates.push(vec![alpha * c[0] + s * h * perp[0], alpha * c[1] + s * h * perp[1]]);
            }
        }
    }

    let mut best: Option<(f64, Vec<f64>)> = None;
    for w in candidates.into_iter().filter(|w| feasible(w)) {
        let v = problem.objective(q, &w);
        if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
            best = Some((v, w));
        }
    }
    let (value, argmax) = best.ok_or(Error::EmptyIntersection {
        center_norm: cn,
        radius: r,
    })?;
    let ok = value <= problem.threshold();
    Ok(Verification {
        ok,
        value,
        witness: (!ok).then(|| argmax.clone()),
        argmax,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball(c: &[f64], r: f64) -> SearchBall {
        SearchBall::new(c.to_vec(), r).unwrap()
    }

    #[test]
    fn zero_weights_give_zero() {
        let p = RemovalProblem::new(vec![vec![0.05, 1.0]], ball(&[1.0, 0.0], 0.1), 0.1, 0.2, 2.0).unwrap();
        let s = separation_oracle(&WeightMap::from_vec(vec![0.0]).unwrap(), &p, 3, 0).unwrap();
        assert_eq!(s.value, 0.0);
    }

    #[test]
    fn single_instance_value() {
        let p = RemovalProblem::new(vec![vec![0.1, 0.0]], ball(&[1.0, 0.0], 0.1), 0.1, 0.2, 2.0).unwrap();
        let s = separation_oracle(&WeightMap::ones(1), &p, 3, 0).unwrap();
        assert!(s.value >= 0.0081 && s.value <= 0.01 + 1e-12, "{}", s.value);
    }

    #[test]
    fn band_predicate_enforced() {
        assert!(RemovalProblem::new(vec![vec![0.5, 0.0]], ball(&[1.0, 0.0], 0.1), 0.1, 0.2, 2.0).is_err());
        // zero center: no band
        assert!(RemovalProblem::new(vec![vec![5.0, 0.0]], ball(&[0.0, 0.0], 1.0), 1.0, 0.2, 2.0).is_ok());
    }

    #[test]
    fn zero_xi_with_violation_is_infeasible() {
        let mut xs = vec![vec![0.0, 0.1]; 9];
        xs.push(vec![0.0, 100.0]);
        let p = RemovalProblem::new(xs, ball(&[1.0, 0.0], 0.1), 0.1, 0.0, 4.0).unwrap();
        let err = soft_outlier_removal(&p, 100, 3, 0).unwrap_err();
        assert!(matches!(err, Error::Infeasible(InfeasibleReason::MassExhausted { .. })));
    }

    #[test]
    fn cut_enforcement_hits_target() {
        let mut q = vec![1.0; 4];
        let a = [4.0, 0.0, 1.0, 2.0];
        enforce_cut(&mut q, &a, 3.0);
        let s: f64 = q.iter().zip(&a).map(|(x, y)| x * y).sum();
        assert!((s - 3.0).abs() < 1e-12);
        assert_eq!(q, vec![0.0, 1.0, 1.0, 1.0]);
    }
}
