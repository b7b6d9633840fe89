//! Reweighted hinge loss over a labeled sample and its minimization over a
//! search ball by projected subgradient descent.

use std::cmp::Ordering;
use std::fmt::Write as _;

use crate::dist::{sample_band, DistributionSpec, Estimate, DEFAULT_MAX_ATTEMPTS};
use crate::error::{Error, Result};
use crate::geometry::project_to_ball_pair;
use crate::linalg::{dot, norm};
use crate::stats::mean_stderr;
use crate::types::{BandSpec, Label, SearchBall, UnitVec};

/// Upper limit on subgradient iterations regardless of the nominal budget.
pub const DEFAULT_ITER_CAP: usize = 6000;

#[derive(Clone, Debug)]
pub struct HingeProblem {
    xs: Vec<Vec<f64>>,
    ys: Vec<Label>,
    p: Vec<f64>,
    tau: f64,
    ball: SearchBall,
    kappa: f64,
}

impl HingeProblem {
    /// Samples are stored in a canonical order so that the result does not
    /// depend on the order they were supplied in.
    pub fn new(
        samples: Vec<(Vec<f64>, Label)>,
        weights: Vec<f64>,
        tau: f64,
        ball: SearchBall,
        kappa: f64,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("samples", "need at least one sample"));
        }
        if weights.len() != samples.len() {
            return Err(Error::DimensionMismatch {
                expected: samples.len(),
                found: weights.len(),
            });
        }
        if let Some(bad) = samples.iter().find(|(x, _)| x.len() != ball.dim()) {
            return Err(Error::DimensionMismatch {
                expected: ball.dim(),
                found: bad.0.len(),
            });
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::invalid("weights", "must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("weights", format!("sum to {total}, expected 1")));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::invalid("tau", format!("{tau} must be positive")));
        }
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::invalid("kappa", format!("{kappa} must be positive")));
        }
        if !ball.is_nonempty() {
            return Err(Error::EmptyIntersection {
                center_norm: norm(ball.center()),
                radius: ball.radius(),
            });
        }
        let mut rows: Vec<((Vec<f64>, Label), f64)> = samples.into_iter().zip(weights).collect();
        rows.sort_by(|a, b| {
            canonical(&a.0 .0, &b.0 .0)
                .then(a.0 .1.value().total_cmp(&b.0 .1.value()))
                .then(a.1.total_cmp(&b.1))
        });
        let mut xs = Vec::with_capacity(rows.len());
        let mut ys = Vec::with_capacity(rows.len());
        let mut p = Vec::with_capacity(rows.len());
        for ((x, y), w) in rows {
            xs.push(x);
            ys.push(y);
            p.push(w);
        }
        Ok(HingeProblem {
            xs,
            ys,
            p,
            tau,
            ball,
            kappa,
        })
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn ball(&self) -> &SearchBall {
        &self.ball
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn samples(&self) -> impl Iterator<Item = (&[f64], Label, f64)> {
        self.xs
            .iter()
            .zip(&self.ys)
            .zip(&self.p)
            .map(|((x, y), p)| (x.as_slice(), *y, *p))
    }

    /// `G = sum p |x| / tau`, a bound on every subgradient norm.
    pub fn gradient_bound(&self) -> f64 {
        self.xs.iter().zip(&self.p).map(|(x, p)| p * norm(x)).sum::<f64>() / self.tau
    }

    /// `ceil((2 diam(W) G / kappa)^2)`
    pub fn nominal_budget(&self) -> f64 {
        (2.0 * self.ball.diameter() * self.gradient_bound() / self.kappa)
            .powi(2)
            .ceil()
    }

    /// Loss and a subgradient at `w`; the subgradient is written into `g`.
    fn loss_and_subgradient(&self, w: &[f64], g: &mut [f64]) -> f64 {
        g.iter_mut().for_each(|v| *v = 0.0);
        let mut loss = 0.0;
        for ((x, y), p) in self.xs.iter().zip(&self.ys).zip(&self.p) {
            let m = y.value() * dot(w, x) / self.tau;
            if m < 1.0 {
                loss += p * (1.0 - m);
                let s = -p * y.value() / self.tau;
                for (gi, xi) in g.iter_mut().zip(x) {
                    *gi += s * xi;
                }
            }
        }
        loss
    }
}

fn canonical(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// `sum p(x) max{0, 1 - y (w . x) / tau}`
pub fn hinge_loss(w: &[f64], problem: &HingeProblem) -> f64 {
    problem
        .samples()
        .map(|(x, y, p)| p * (1.0 - y.value() * dot(w, x) / problem.tau).max(0.0))
        .sum()
}

/// A subgradient of [`hinge_loss`] at `w`.
pub fn hinge_subgradient(w: &[f64], problem: &HingeProblem) -> Vec<f64> {
    let mut g = vec![0.0; w.len()];
    problem.loss_and_subgradient(w, &mut g);
    g
}

/// Weighted fraction of samples misclassified by `w` (sign(0) = +1).
pub fn weighted_disagreement(w: &[f64], problem: &HingeProblem) -> f64 {
    problem
        .samples()
        .filter(|(x, y, _)| Label::of(dot(w, x)) != *y)
        .map(|(_, _, p)| p)
        .sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct HingeSolution {
    pub v: Vec<f64>,
    pub loss: f64,
    pub iterations: usize,
    /// `(iteration, loss at that iterate)` when requested.
    pub trajectory: Option<Vec<(usize, f64)>>,
}

impl HingeSolution {
    pub fn trajectory_csv(&self) -> Option<String> {
        self.trajectory.as_ref().map(|t| {
            let mut out = String::from("iteration,loss\n");
            for (i, l) in t {
                let _ = writeln!(out, "{i},{l:.12}");
            }
            out
        })
    }
}

/// `min(nominal budget, cap)`, at least one.
pub fn iteration_budget(problem: &HingeProblem, cap: usize) -> usize {
    let nominal = problem.nominal_budget();
    if nominal.is_finite() && nominal < cap as f64 {
        (nominal as usize).max(1)
    } else {
        cap.max(1)
    }
}

/// Projected subgradient descent from the ball center with normalized steps
/// `diam(W) / (2 sqrt(t))`. Returns the better of the best iterate and the
/// average of the last half of the iterates.
///
/// The method is deterministic; `seed` is accepted for interface symmetry
/// with the other randomized stages and perturbs nothing.
pub fn minimize_hinge(problem: &HingeProblem, iter_budget: usize, seed: u64, record: bool) -> Result<HingeSolution> {
    let _ = seed;
    if iter_budget == 0 {
        return Err(Error::invalid("iteration budget", "must be at least 1"));
    }
    let ball = problem.ball();
    let d = ball.dim();
    let diam = ball.diameter();
    let mut w = project_to_ball_pair(ball.center(), ball)?;
    let mut g = vec![0.0; d];
    let mut best_w = w.clone();
    let mut best = f64::INFINITY;
    let half = iter_budget / 2;
    let mut avg = vec![0.0; d];
    let mut avg_count = 0usize;
    let mut trajectory = record.then(Vec::new);
    let mut iterations = 0;

    for t in 1..=iter_budget {
        iterations = t;
        let loss = problem.loss_and_subgradient(&w, &mut g);
        if let Some(tr) = trajectory.as_mut() {
            tr.push((t - 1, loss));
        }
        if loss < best {
            best = loss;
            best_w.copy_from_slice(&w);
        }
        let gn = norm(&g);
        if gn == 0.0 {
            break;
        }
        let step = diam / (2.0 * (t as f64).sqrt());
        let p: Vec<f64> = w.iter().zip(&g).map(|(wi, gi)| wi - step * gi / gn).collect();
        w = project_to_ball_pair(&p, ball)?;
        if t > half {
            for (a, wi) in avg.iter_mut().zip(&w) {
                *a += wi;
            }
            avg_count += 1;
        }
    }
    let last = hinge_loss(&w, problem);
    if last < best {
        best = last;
        best_w.copy_from_slice(&w);
    }
    if avg_count > 0 {
        avg.iter_mut().for_each(|a| *a /= avg_count as f64);
        let avg = project_to_ball_pair(&avg, ball)?;
        let l = hinge_loss(&avg, problem);
        if l < best {
            best = l;
            best_w = avg;
        }
    }
    Ok(HingeSolution {
        v: best_w,
        loss: best,
        iterations,
        trajectory,
    })
}

/// Monte-Carlo estimate of the expected hinge loss over `D` conditioned on
/// `band`, with labels `sign(w* . x)`.
pub fn expected_hinge_mc(
    spec: &DistributionSpec,
    band: &BandSpec,
    w_star: &UnitVec,
    w: &[f64],
    tau: f64,
    n: usize,
    seed: u64,
) -> Result<Estimate> {
    if w_star.is_zero() {
        return Err(Error::ZeroVector);
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::invalid("tau", "must be positive"));
    }
    let draws = sample_band(spec, band, n, seed, DEFAULT_MAX_ATTEMPTS.saturating_mul(10))?;
    let values: Vec<f64> = draws
        .points
        .iter()
        .map(|x| {
            let y = Label::of(w_star.dot(x)).value();
            (1.0 - y * dot(w, x) / tau).max(0.0)
        })
        .collect();
    let (value, stderr) = mean_stderr(&values);
    Ok(Estimate { value, stderr })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(wx: f64, y: Label) -> HingeProblem {
        let ball = SearchBall::new(vec![0.0, 0.0], 1.0).unwrap();
        HingeProblem::new(vec![(vec![wx, 0.0], y)], vec![1.0], 0.1, ball, 0.05).unwrap()
    }

    #[test]
    fn formula_examples() {
        assert_eq!(hinge_loss(&[1.0, 0.0], &single(0.2, Label::Pos)), 0.0);
        assert!((hinge_loss(&[1.0, 0.0], &single(0.2, Label::Neg)) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn weights_must_sum_to_one() {
        let ball = SearchBall::new(vec![0.0, 0.0], 1.0).unwrap();
        assert!(HingeProblem::new(vec![(vec![1.0, 0.0], Label::Pos)], vec![0.5], 0.1, ball, 0.05).is_err());
    }

    #[test]
    fn consistent_center_is_optimal() {
        let ball = SearchBall::new(vec![1.0, 0.0], 0.2).unwrap();
        let samples = vec![(vec![0.5, 0.3], Label::Pos), (vec![-0.4, 1.0], Label::Neg)];
        let p = HingeProblem::new(samples, vec![0.5, 0.5], 0.1, ball, 0.05).unwrap();
        let sol = minimize_hinge(&p, 100, 0, false).unwrap();
        assert_eq!(sol.loss, 0.0);
        assert_eq!(sol.v, vec![1.0, 0.0]);
    }
}
